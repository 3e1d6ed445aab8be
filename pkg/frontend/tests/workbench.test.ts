/** End-to-end test against a live prover service: load the shipped
 * bounded-reachability proof, replay its tactic transcript through the
 * view-model, and check the exported certificate is byte-identical to the
 * command-line prover's output.
 */

import { execFile, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { promisify } from "node:util";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ServiceError, WorkbenchApi } from "../src/api.js";
import { WorkbenchModel } from "../src/model.js";

const execFileP = promisify(execFile);
const ROOT = resolve(__dirname, "..", "..");
const PORT = 18700 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let workdir: string;

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const res = await fetch(`${BASE}/examples`);
      if (res.ok) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "workbench-"));
  server = spawn(
    "python3",
    ["-m", "hyllkit.cli", "serve", "--root", ROOT, "--port", String(PORT)],
    { stdio: "ignore" },
  );
  await waitForService();
}, 30000);

afterAll(() => {
  server.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("workbench against a live service", () => {
  it("lists the shipped example scripts", async () => {
    const api = new WorkbenchApi(BASE);
    const names = (await api.listExamples()).map((e) => e.name);
    expect(names).toContain("property2.hp");
  });

  it("rejects a bogus tactic and leaves the goal count unchanged", async () => {
    const model = new WorkbenchModel(new WorkbenchApi(BASE));
    await model.loadPath("proofs/property2.hp");
    expect(model.goals.length).toBe(1);

    const ok = await model.apply("oneR"); // goal is not the unit
    expect(ok).toBe(false);
    expect(model.error).toBeTruthy();
    expect(model.goals.length).toBe(1);

    const okParse = await model.apply("frobnicate");
    expect(okParse).toBe(false);
    expect(model.goals.length).toBe(1);
  }, 30000);

  it("undo restores the previous goal list", async () => {
    const model = new WorkbenchModel(new WorkbenchApi(BASE));
    await model.loadPath("proofs/property2.hp");
    const before = JSON.stringify(model.goals);
    await model.apply("tensorL 0");
    expect(JSON.stringify(model.goals)).not.toBe(before);
    await model.undo();
    expect(JSON.stringify(model.goals)).toBe(before);
  }, 30000);

  it("export is refused while goals are open", async () => {
    const model = new WorkbenchModel(new WorkbenchApi(BASE));
    await model.loadPath("proofs/property2.hp");
    const bytes = await model.exportCertificate();
    expect(bytes).toBeNull();
    expect(model.error).toContain("OpenGoals");
  }, 30000);

  it("replaying the shipped transcript exports the prover's exact bytes", async () => {
    const model = new WorkbenchModel(new WorkbenchApi(BASE));
    await model.loadPath("proofs/property2.hp");
    const transcript = model.state!.tactics;
    expect(transcript.length).toBeGreaterThan(0);

    expect(await model.replay(transcript)).toBe(true);
    expect(model.complete).toBe(true);
    expect(model.state!.witnesses).toEqual({ "?u": "4" });

    const exported = await model.exportCertificate();
    expect(exported).not.toBeNull();

    const out = join(workdir, "p2.cert.json");
    await execFileP("python3", [
      "-m",
      "hyllkit.cli",
      "prove",
      join(ROOT, "proofs", "property2.hp"),
      "-o",
      out,
    ]);
    expect(Buffer.from(exported!)).toEqual(readFileSync(out));
  }, 60000);

  it("surfaces structured errors for unknown sessions", async () => {
    const api = new WorkbenchApi(BASE);
    await expect(api.getState("nosuch")).rejects.toBeInstanceOf(ServiceError);
  });
});
