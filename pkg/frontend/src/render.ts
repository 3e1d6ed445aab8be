/** Pure rendering: server documents to HTML strings.  No DOM access here,
 * so everything is unit-testable; ui.ts owns event wiring.
 */

import { GoalDoc, JudgementDoc, SessionState } from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** A judgement with its world expression highlighted. */
export function renderJudgement(j: JudgementDoc): string {
  return (
    `<span class="formula">${escapeHtml(j.formula)}</span>` +
    ` <span class="at">@</span> ` +
    `<span class="world">${escapeHtml(j.world)}</span>`
  );
}

function renderZone(name: string, zone: JudgementDoc[]): string {
  const items = zone.length
    ? zone
        .map((j, i) => `<li value="${i}">${renderJudgement(j)}</li>`)
        .join("")
    : `<li class="empty">&middot;</li>`;
  return `<ol class="zone ${name}" start="0">${items}</ol>`;
}

export function renderGoalCard(goal: GoalDoc, selected: boolean): string {
  const classes = ["goal-card", selected ? "selected" : ""]
    .filter(Boolean)
    .join(" ");
  if (goal.family) {
    const cases = (goal.cases ?? []).map(escapeHtml).join(", ");
    return (
      `<section class="${classes}" data-gid="${goal.gid}">` +
      `<h3>${escapeHtml(goal.name)}</h3>` +
      `<p class="family">case family: ${cases}</p>` +
      `<p class="hint-inline">use <code>cases</code> to split</p>` +
      `</section>`
    );
  }
  const seq = goal.sequent!;
  return (
    `<section class="${classes}" data-gid="${goal.gid}">` +
    `<h3>${escapeHtml(goal.name)}</h3>` +
    renderZone("gamma", seq.gamma) +
    `<div class="turnstile">&#8866;</div>` +
    renderZone("delta", seq.delta) +
    `<div class="conclusion">${renderJudgement(seq.goal)}</div>` +
    `</section>`
  );
}

export function renderGoals(state: SessionState, selected: number | null): string {
  if (state.complete) {
    return `<p class="complete">Proof complete.</p>`;
  }
  return state.goals
    .map((g, i) =>
      renderGoalCard(g, selected === null ? i === 0 : g.gid === selected),
    )
    .join("");
}

export function renderWitnesses(state: SessionState): string {
  const entries = Object.entries(state.witnesses);
  if (!entries.length) return "";
  const rows = entries
    .map(([k, v]) => `<li><code>${escapeHtml(k)} = ${escapeHtml(v)}</code></li>`)
    .join("");
  return `<ul class="witnesses">${rows}</ul>`;
}

export function renderHistory(state: SessionState): string {
  const rows = state.history
    .map((t) => `<li><code>${escapeHtml(t)}</code></li>`)
    .join("");
  return `<ol class="history">${rows}</ol>`;
}

export function renderError(message: string | null): string {
  return message
    ? `<div class="error" role="alert">${escapeHtml(message)}</div>`
    : "";
}

export function renderHints(hints: string[]): string {
  return hints
    .map(
      (h) =>
        `<button class="hint" data-tactic="${escapeHtml(h)}">` +
        `${escapeHtml(h)}</button>`,
    )
    .join("");
}
