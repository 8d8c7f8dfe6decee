/**
 * Optional runtime dependency, loaded dynamically by the hf backend.
 * Install with `npm install @huggingface/transformers` to enable it; the
 * loose typing keeps the package buildable without it.
 */
declare module "@huggingface/transformers";
