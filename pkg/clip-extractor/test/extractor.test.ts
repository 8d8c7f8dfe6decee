import assert from "node:assert/strict";
import { mkdir, mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import os from "node:os";
import path from "node:path";
import test from "node:test";

import { StubBackend } from "../src/backends/stub.js";
import { runExtraction, tensorPathFor } from "../src/extractor.js";
import { parseManifest } from "../src/manifest.js";
import { readTensor } from "../src/tensorfile.js";

async function writeFixture(dir: string, augmentations = ["GaussNoise", "HorizontalFlip"]) {
  const doc = {
    schema_version: 1,
    global_seed: 3,
    images: [] as unknown[],
  };
  for (const key of ["a", "b", "c"]) {
    const entry: Record<string, unknown> = {
      image_key: key,
      original: { image_path: `original/${key}.png` },
      augmentations: {} as Record<string, unknown>,
    };
    await mkdir(path.join(dir, "original"), { recursive: true });
    await writeFile(path.join(dir, "original", `${key}.png`), `pixels-original-${key}`);
    for (const aug of augmentations) {
      await mkdir(path.join(dir, aug), { recursive: true });
      await writeFile(path.join(dir, aug, `${key}.png`), `pixels-${aug}-${key}`);
      (entry.augmentations as Record<string, unknown>)[aug] = {
        image_path: `${aug}/${key}.png`,
      };
    }
    doc.images.push(entry);
  }
  const manifestPath = path.join(dir, "manifest.json");
  await writeFile(manifestPath, JSON.stringify(doc, null, 2), "utf-8");
  return manifestPath;
}

test("sibling tensor paths", () => {
  assert.equal(tensorPathFor("GaussNoise/k.png", "emb"), "GaussNoise/k.emb.stns");
  assert.equal(tensorPathFor("original/k.png", "attn"), "original/k.attn.stns");
  assert.equal(tensorPathFor("noext", "emb"), "noext.emb.stns");
});

test("stub extraction writes tensors and updates the manifest", async () => {
  const dir = await mkdtemp(path.join(os.tmpdir(), "extract-"));
  try {
    const manifestPath = await writeFixture(dir);
    const summary = await runExtraction(
      { manifestPath, batchSize: 4, normalize: false, gridSize: 7 },
      new StubBackend(),
    );
    assert.equal(summary.images, 9); // 3 entries x (original + 2 augmentations)
    assert.equal(summary.tensorsWritten, 18);
    assert.deepEqual(summary.failures, []);

    const manifest = parseManifest(await readFile(manifestPath, "utf-8"));
    for (const entry of manifest.images) {
      for (const refs of [entry.original, ...Object.values(entry.augmentations)]) {
        assert.equal(refs.embedding_path, tensorPathFor(refs.image_path, "emb"));
        assert.equal(refs.attention_path, tensorPathFor(refs.image_path, "attn"));
        const emb = await readTensor(path.join(dir, refs.embedding_path!));
        assert.deepEqual(emb.dims, [512]);
        const attn = await readTensor(path.join(dir, refs.attention_path!));
        assert.deepEqual(attn.dims, [7, 7]);
        let total = 0;
        for (const v of attn.values) {
          assert.ok(v >= 0);
          total += v;
        }
        assert.ok(total <= 1 + 1e-6, "class-row patch mass stays below one");
      }
    }
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
});

test("extraction is deterministic for identical inputs", async () => {
  const blobs: Record<string, Buffer>[] = [];
  for (let round = 0; round < 2; round++) {
    const dir = await mkdtemp(path.join(os.tmpdir(), `extract-det${round}-`));
    try {
      const manifestPath = await writeFixture(dir);
      await runExtraction(
        { manifestPath, batchSize: 2, normalize: true, gridSize: 7 },
        new StubBackend(),
      );
      const snapshot: Record<string, Buffer> = {};
      const manifest = parseManifest(await readFile(manifestPath, "utf-8"));
      for (const entry of manifest.images) {
        for (const refs of [entry.original, ...Object.values(entry.augmentations)]) {
          snapshot[refs.embedding_path!] = await readFile(path.join(dir, refs.embedding_path!));
          snapshot[refs.attention_path!] = await readFile(path.join(dir, refs.attention_path!));
        }
      }
      snapshot["manifest.json"] = await readFile(manifestPath);
      blobs.push(snapshot);
    } finally {
      await rm(dir, { recursive: true, force: true });
    }
  }
  assert.deepEqual(Object.keys(blobs[0]).sort(), Object.keys(blobs[1]).sort());
  for (const name of Object.keys(blobs[0])) {
    assert.ok(blobs[0][name].equals(blobs[1][name]), `differs between runs: ${name}`);
  }
});

test("normalized embeddings have unit length", async () => {
  const dir = await mkdtemp(path.join(os.tmpdir(), "extract-norm-"));
  try {
    const manifestPath = await writeFixture(dir, ["GaussNoise"]);
    await runExtraction(
      { manifestPath, batchSize: 3, normalize: true, gridSize: 7 },
      new StubBackend(),
    );
    const manifest = parseManifest(await readFile(manifestPath, "utf-8"));
    const refs = manifest.images[0].original;
    const emb = await readTensor(path.join(dir, refs.embedding_path!));
    let sumSq = 0;
    for (const v of emb.values) sumSq += v * v;
    assert.ok(Math.abs(Math.sqrt(sumSq) - 1) < 1e-5);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
});

test("missing image files are recorded as failures, others proceed", async () => {
  const dir = await mkdtemp(path.join(os.tmpdir(), "extract-fail-"));
  try {
    const manifestPath = await writeFixture(dir, ["GaussNoise"]);
    await rm(path.join(dir, "GaussNoise", "b.png"));
    const summary = await runExtraction(
      { manifestPath, batchSize: 4, normalize: false, gridSize: 7 },
      new StubBackend(),
    );
    assert.equal(summary.failures.length, 1);
    assert.equal(summary.failures[0].image_key, "b");
    assert.equal(summary.failures[0].slot, "GaussNoise");
    const manifest = parseManifest(await readFile(manifestPath, "utf-8"));
    const failed = manifest.images.find((e) => e.image_key === "b")!;
    assert.equal(failed.augmentations.GaussNoise.embedding_path, null);
    assert.notEqual(failed.original.embedding_path, null);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
});
