/** DOM wiring for the workbench page.  The model re-renders the whole view
 * from the server's state document on every change; nothing is patched
 * optimistically.
 */

import { WorkbenchApi } from "./api.js";
import { WorkbenchModel } from "./model.js";
import {
  renderError,
  renderGoals,
  renderHints,
  renderHistory,
  renderWitnesses,
} from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function mountWorkbench(baseUrl: string): WorkbenchModel {
  const api = new WorkbenchApi(baseUrl);
  const model = new WorkbenchModel(api);

  const goalsBox = el<HTMLDivElement>("goals");
  const errorBox = el<HTMLDivElement>("error");
  const witnessBox = el<HTMLDivElement>("witnesses");
  const historyBox = el<HTMLDivElement>("history");
  const hintsBox = el<HTMLDivElement>("hints");
  const tacticInput = el<HTMLInputElement>("tactic");
  const exportButton = el<HTMLButtonElement>("export");
  const undoButton = el<HTMLButtonElement>("undo");
  const examplesSelect = el<HTMLSelectElement>("examples");

  model.subscribe(async (m) => {
    errorBox.innerHTML = renderError(m.error);
    if (!m.state) return;
    goalsBox.innerHTML = renderGoals(m.state, m.selected);
    witnessBox.innerHTML = renderWitnesses(m.state);
    historyBox.innerHTML = renderHistory(m.state);
    exportButton.disabled = !m.complete;
    hintsBox.innerHTML = m.complete ? "" : renderHints(await m.hints());
  });

  goalsBox.addEventListener("click", (ev) => {
    const card = (ev.target as HTMLElement).closest<HTMLElement>(".goal-card");
    if (card) model.selectGoal(Number(card.dataset.gid));
  });

  hintsBox.addEventListener("click", (ev) => {
    const button = (ev.target as HTMLElement).closest<HTMLElement>(".hint");
    if (button) tacticInput.value = button.dataset.tactic ?? "";
  });

  tacticInput.addEventListener("keydown", async (ev) => {
    if (ev.key !== "Enter") return;
    const text = tacticInput.value.trim();
    if (!text) return;
    if (await model.apply(text)) tacticInput.value = "";
  });

  undoButton.addEventListener("click", () => void model.undo());

  exportButton.addEventListener("click", async () => {
    const bytes = await model.exportCertificate();
    if (!bytes) return;
    const blob = new Blob([bytes.buffer as ArrayBuffer], {
      type: "application/json",
    });
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = "proof.cert.json";
    link.click();
    URL.revokeObjectURL(link.href);
  });

  examplesSelect.addEventListener("change", () => {
    const path = examplesSelect.value;
    if (path) void model.loadPath(path);
  });

  void api.listExamples().then((examples) => {
    examplesSelect.innerHTML =
      `<option value="">choose an example…</option>` +
      examples
        .map((e) => `<option value="${e.path}">${e.name}</option>`)
        .join("");
  });

  return model;
}
