/** DOM rendering. Everything on screen derives from the latest API
 * fetch; there is no client-side cache to go stale. */

import type { Disagreement, FailureSummary, SampleDetail } from "./api.js";
import type { PickerOption, PickerState } from "./taxonomy.js";
import { badgesFor } from "./state.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderQueue(
  container: HTMLElement,
  items: FailureSummary[],
  selectedKey: string | null,
  onSelect: (key: string) => void,
): void {
  container.replaceChildren();
  if (items.length === 0) {
    container.append(el("div", "queue-clear", "Queue clear — nothing matches these filters."));
    return;
  }
  for (const item of items) {
    const row = el("div", "queue-row" + (item.sample_key === selectedKey ? " selected" : ""));
    row.dataset.key = item.sample_key;
    const badges = badgesFor(item);
    const badgeBox = el("span", "badges");
    if (badges.disagreement) badgeBox.append(el("span", "badge badge-disagreement", "disagreement"));
    if (badges.finalized) badgeBox.append(el("span", "badge badge-finalized", "finalized"));
    if (badges.unreviewed) badgeBox.append(el("span", "badge badge-unreviewed", "unreviewed"));
    row.append(
      el("span", "queue-label", item.label_path ?? "—"),
      el("span", "queue-task", `${item.task_id} · ${item.model_id} · it${item.iteration}`),
      el("span", "queue-excerpt", item.task_excerpt),
      badgeBox,
    );
    row.addEventListener("click", () => onSelect(item.sample_key));
    container.append(row);
  }
}

export interface DetailHooks {
  onReveal: () => void;
  revealed: boolean;
}

export function renderDetail(
  container: HTMLElement,
  detail: SampleDetail,
  hooks: DetailHooks,
): void {
  container.replaceChildren();
  const state = detail.state;

  const head = el("div", "detail-head");
  head.append(
    el("h2", undefined, `${detail.task_id} · ${detail.model_id} · iteration ${detail.iteration}`),
    el("div", "detail-state",
       `label ${state.label_path ?? "—"} (${state.provenance ?? "none"}, v${state.version}, ` +
       `${state.review_count} review${state.review_count === 1 ? "" : "s"})` +
       (state.disagreement ? " · DISAGREEMENT" : "") +
       (state.finalized ? " · finalized" : "")),
  );
  container.append(head);

  if (detail.task_excerpt) {
    container.append(el("p", "task-excerpt", detail.task_excerpt));
  }

  const codeBlock = el("pre", "code-block");
  codeBlock.textContent = detail.code || "(no code extracted)";
  container.append(el("h3", undefined, "Candidate code"), codeBlock);

  const verdicts = detail.per_test
    .map((t) => `${t.test_id}: ${t.verdict}`)
    .join("   ");
  container.append(el("div", "verdicts", verdicts || "no recorded verdicts"));

  if (detail.diagnostics) {
    const diag = el("pre", "diagnostics");
    diag.textContent = detail.diagnostics;
    container.append(el("h3", undefined, "Diagnostics"), diag);
  }

  // Machine suggestions stay collapsed until the reviewer explicitly
  // reveals them; the reveal is recorded with the submission.
  const suggestions = el("div", "suggestions");
  const hasSuggestions = Boolean(detail.suggestion_rationale || detail.root_causes);
  if (hasSuggestions) {
    if (hooks.revealed) {
      if (detail.suggestion_rationale) {
        suggestions.append(el("p", "rationale", `heuristic: ${detail.suggestion_rationale}`));
      }
      for (const cause of detail.root_causes ?? []) {
        suggestions.append(
          el("p", "root-cause" + (cause.placeholder ? " placeholder" : ""),
             `${cause.summary}${cause.explanation ? " — " + cause.explanation : ""}`),
        );
      }
    } else {
      const button = el("button", "reveal-button", "Reveal machine suggestions (r)");
      button.addEventListener("click", hooks.onReveal);
      suggestions.append(button);
    }
    container.append(el("h3", undefined, "Suggestions"), suggestions);
  }

  if (detail.history.length) {
    const list = el("ul", "history");
    for (const event of detail.history) {
      list.append(el("li", undefined,
        `v${event.version} ${event.label_path} by ${event.reviewer_id}` +
        (event.note ? ` — ${event.note}` : "")));
    }
    container.append(el("h3", undefined, "Label history"), list);
  }
}

export function renderPicker(
  container: HTMLElement,
  state: PickerState,
  options: PickerOption[],
  onPick: (code: string) => void,
): void {
  container.replaceChildren();
  const stageNames: Record<string, string> = {
    primary: "Pick the primary type",
    secondary: "Pick the bug type (digit keys)",
    tertiary: "Refine (digit keys, 0 to keep the secondary only)",
    ready: `Ready to submit: ${state.path}`,
  };
  container.append(el("div", "picker-stage", stageNames[state.stage]));
  for (const option of options) {
    const row = el("button", "picker-option");
    row.append(
      el("kbd", undefined, option.key),
      el("span", "picker-code", option.code),
      el("span", "picker-name", option.name),
      el("span", "picker-desc", option.description),
    );
    row.addEventListener("click", () => onPick(option.code));
    container.append(row);
  }
}

export function renderDisagreements(
  container: HTMLElement,
  rows: Disagreement[],
  onSelect: (key: string) => void,
): void {
  container.replaceChildren();
  if (!rows.length) {
    container.append(el("div", "queue-clear", "No open disagreements."));
    return;
  }
  for (const row of rows) {
    const item = el("div", "queue-row disagreement-row");
    item.append(
      el("span", "queue-task", `${row.task_id} · ${row.model_id}`),
      el("span", "conflict", row.conflicting_paths.join(" vs ")),
      el("span", "reviewers", row.reviewers.join(", ")),
    );
    item.addEventListener("click", () => onSelect(row.sample_key));
    container.append(item);
  }
}

export function renderErrorBanner(container: HTMLElement, message: string | null,
                                  onRetry: () => void): void {
  container.replaceChildren();
  if (!message) {
    container.hidden = true;
    return;
  }
  container.hidden = false;
  container.append(el("span", undefined, message));
  const retry = el("button", "retry", "Retry");
  retry.addEventListener("click", onRetry);
  container.append(retry);
}
