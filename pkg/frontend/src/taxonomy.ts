/**
 * Picker logic over the taxonomy listing fetched from the API.
 *
 * The catalog is the single source of truth: every path the picker can
 * produce comes from a node the server sent, so the UI cannot submit a
 * label the taxonomy does not contain.
 */

import type { TaxonomyNode } from "./api.js";

export interface PickerOption {
  key: string; // the digit a reviewer presses
  code: string; // full label path this option produces
  name: string;
  description: string;
}

export class TaxonomyCatalog {
  private readonly byCode = new Map<string, TaxonomyNode>();
  private readonly children = new Map<string, TaxonomyNode[]>();

  constructor(nodes: TaxonomyNode[]) {
    for (const node of nodes) {
      this.byCode.set(node.code, node);
      if (node.parent) {
        const siblings = this.children.get(node.parent) ?? [];
        siblings.push(node);
        this.children.set(node.parent, siblings);
      }
    }
  }

  node(code: string): TaxonomyNode | undefined {
    return this.byCode.get(code);
  }

  isValidPath(path: string): boolean {
    return this.byCode.has(path) || path === "PASS";
  }

  /** Secondary options for a sample's primary letter ("A" | "B" | "C" | "D"). */
  secondaryOptions(primaryLetter: string): PickerOption[] {
    const nodes = this.children.get(primaryLetter) ?? [];
    return nodes
      .filter((n) => n.level === "secondary")
      .map((node, index) => ({
        key: String(index + 1),
        code: node.code,
        name: node.name,
        description: node.description,
      }));
  }

  /** Tertiary options under one secondary code; empty when it has none. */
  tertiaryOptions(secondaryCode: string): PickerOption[] {
    const nodes = this.children.get(secondaryCode) ?? [];
    return nodes
      .filter((n) => n.level === "tertiary")
      .map((node, index) => ({
        key: String(index + 1),
        code: node.code,
        name: node.name,
        description: node.description,
      }));
  }

  /** Primary letters a reviewer may relabel to (D included: it is
   * human-assignable only, so the picker is where it appears). */
  primaryOptions(): PickerOption[] {
    const letters = ["A", "B", "C", "D"];
    return letters
      .map((code) => this.byCode.get(code))
      .filter((n): n is TaxonomyNode => Boolean(n))
      .map((node, index) => ({
        key: String(index + 1),
        code: node.code,
        name: node.name,
        description: node.description,
      }));
  }
}

export type PickerStage = "primary" | "secondary" | "tertiary" | "ready";

export interface PickerState {
  stage: PickerStage;
  primaryLetter: string | null;
  secondaryCode: string | null;
  path: string | null; // the path that would be submitted
}

export function startPicker(primaryLetter: string | null): PickerState {
  if (primaryLetter) {
    return { stage: "secondary", primaryLetter, secondaryCode: null, path: null };
  }
  return { stage: "primary", primaryLetter: null, secondaryCode: null, path: null };
}

/**
 * Advance the picker with one chosen option; selecting a secondary with
 * tertiary splits moves to the tertiary stage, otherwise the path is
 * ready. Selecting "D" is terminal (no secondaries).
 */
export function advancePicker(
  catalog: TaxonomyCatalog,
  state: PickerState,
  optionCode: string,
): PickerState {
  if (!catalog.isValidPath(optionCode)) {
    return state;
  }
  if (state.stage === "primary") {
    if (optionCode === "D") {
      return { stage: "ready", primaryLetter: "D", secondaryCode: null, path: "D" };
    }
    return { stage: "secondary", primaryLetter: optionCode, secondaryCode: null, path: null };
  }
  if (state.stage === "secondary") {
    const tertiary = catalog.tertiaryOptions(optionCode);
    if (tertiary.length === 0) {
      return { ...state, stage: "ready", secondaryCode: optionCode, path: optionCode };
    }
    return { ...state, stage: "tertiary", secondaryCode: optionCode, path: optionCode };
  }
  if (state.stage === "tertiary") {
    return { ...state, stage: "ready", path: optionCode };
  }
  return state;
}

/** Skip the tertiary refinement and submit the secondary alone. */
export function acceptWithoutTertiary(state: PickerState): PickerState {
  if (state.stage === "tertiary" && state.secondaryCode) {
    return { ...state, stage: "ready", path: state.secondaryCode };
  }
  return state;
}

export function optionsFor(
  catalog: TaxonomyCatalog,
  state: PickerState,
): PickerOption[] {
  if (state.stage === "primary") return catalog.primaryOptions();
  if (state.stage === "secondary" && state.primaryLetter) {
    return catalog.secondaryOptions(state.primaryLetter);
  }
  if (state.stage === "tertiary" && state.secondaryCode) {
    return catalog.tertiaryOptions(state.secondaryCode);
  }
  return [];
}
