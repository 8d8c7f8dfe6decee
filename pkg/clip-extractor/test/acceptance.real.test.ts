/**
 * Real-model acceptance: qualitative ordering of augmentations under CLIP.
 *
 * Needs network/model access and a directory of at least 50 diverse
 * photographs, so it is skipped unless both are configured:
 *
 *   CLIP_ACCEPTANCE_IMAGES=/path/to/photos \
 *   CLIP_ACCEPTANCE_MODEL=Xenova/clip-vit-base-patch32 \
 *   npm test
 *
 * Checks, against the analysis toolkit's report (rank claims, no numeric
 * tolerances):
 *   (a) GaussNoise has the lowest mean cosine similarity of all nine;
 *   (b) HorizontalFlip and RandomBrightnessContrast rank in the top three
 *       by mean cosine similarity;
 *   (c) at some threshold, GaussNoise forms a singleton flat cluster.
 */

import assert from "node:assert/strict";
import { execFile } from "node:child_process";
import { mkdtemp, readFile, rm } from "node:fs/promises";
import os from "node:os";
import path from "node:path";
import test from "node:test";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import { TransformersBackend } from "../src/backends/transformers.js";
import { runExtraction } from "../src/extractor.js";

const execFileAsync = promisify(execFile);
const IMAGES = process.env.CLIP_ACCEPTANCE_IMAGES;
const MODEL = process.env.CLIP_ACCEPTANCE_MODEL;

test("real CLIP ordering on photographs", { timeout: 600_000 }, async (t) => {
  if (!IMAGES || !MODEL) {
    t.skip("set CLIP_ACCEPTANCE_IMAGES and CLIP_ACCEPTANCE_MODEL to run");
    return;
  }
  const work = await mkdtemp(path.join(os.tmpdir(), "clip-acceptance-"));
  try {
    const out = path.join(work, "augmented");
    await execFileAsync("shiftlens", [
      "augment", "--input-dir", IMAGES, "--output-dir", out, "--seed", "2024",
    ]);
    const manifestPath = path.join(out, "manifest.json");

    const backend = await TransformersBackend.create({ modelId: MODEL });
    const summary = await runExtraction(
      { manifestPath, batchSize: 8, normalize: false, gridSize: 7 },
      backend,
    );
    assert.equal(summary.failures.length, 0, JSON.stringify(summary.failures, null, 2));

    const reportPath = path.join(work, "report.json");
    await execFileAsync("shiftlens", [
      "analyze", "--manifest", manifestPath, "--out", reportPath,
    ]);
    const report = JSON.parse(await readFile(reportPath, "utf-8"));
    const means: Record<string, { cosine_sim: number }> = report.aggregates.means;
    const byCosine = Object.keys(means).sort(
      (a, b) => means[a].cosine_sim - means[b].cosine_sim,
    );

    assert.equal(byCosine[0], "GaussNoise", `lowest mean cosine is ${byCosine[0]}`);
    const topThree = byCosine.slice(-3);
    assert.ok(topThree.includes("HorizontalFlip"), `top three: ${topThree}`);
    assert.ok(topThree.includes("RandomBrightnessContrast"), `top three: ${topThree}`);

    // (c): scan thresholds between consecutive merge heights
    const linkage: number[][] = report.clustering.linkage;
    const augs: string[] = report.clustering.augmentations;
    const noiseLeaf = augs.indexOf("GaussNoise");
    let singletonSomewhere = false;
    for (const row of linkage) {
      const t = row[2] - 1e-12;
      const merged = new Set<number>();
      for (const [a, b, d] of linkage) {
        if (d <= t) {
          merged.add(a);
          merged.add(b);
        }
      }
      if (!merged.has(noiseLeaf)) {
        singletonSomewhere = true;
        break;
      }
    }
    assert.ok(singletonSomewhere, "GaussNoise never forms a singleton cluster");
  } finally {
    await rm(work, { recursive: true, force: true });
  }
});
