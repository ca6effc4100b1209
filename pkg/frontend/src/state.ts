/**
 * Client-side state: URL-shareable queue filters, the optimistic-
 * concurrency submit flow, and the suggestion-reveal audit trail.
 */

import {
  ApiClient,
  FailureFilters,
  LabelState,
  VersionConflictError,
} from "./api.js";

export function filtersToQuery(runId: string, filters: FailureFilters, page: number): string {
  const params = new URLSearchParams();
  params.set("run", runId);
  if (filters.primary) params.set("primary", filters.primary);
  if (filters.secondary) params.set("secondary", filters.secondary);
  if (filters.model) params.set("model", filters.model);
  if (filters.unreviewedOnly) params.set("unreviewed", "1");
  if (page > 1) params.set("page", String(page));
  return params.toString();
}

export interface QueueLocation {
  runId: string;
  filters: FailureFilters;
  page: number;
}

export function filtersFromQuery(query: string): QueueLocation {
  const params = new URLSearchParams(query);
  const filters: FailureFilters = {};
  const primary = params.get("primary");
  const secondary = params.get("secondary");
  const model = params.get("model");
  if (primary) filters.primary = primary;
  if (secondary) filters.secondary = secondary;
  if (model) filters.model = model;
  if (params.get("unreviewed") === "1") filters.unreviewedOnly = true;
  return {
    runId: params.get("run") ?? "",
    filters,
    page: Math.max(1, Number(params.get("page") ?? "1") || 1),
  };
}

/**
 * Whether the reviewer expanded the machine suggestions before labeling
 * a sample. Submitted with the label so lazy-annotation audits have a
 * signal to work with.
 */
export class RevealTracker {
  private revealed = new Set<string>();

  markRevealed(sampleKey: string): void {
    this.revealed.add(sampleKey);
  }

  wasRevealed(sampleKey: string): boolean {
    return this.revealed.has(sampleKey);
  }

  reset(sampleKey: string): void {
    this.revealed.delete(sampleKey);
  }
}

export type SubmitResult =
  | { status: "ok"; state: LabelState }
  | { status: "conflict"; freshState: LabelState; message: string }
  | { status: "error"; message: string };

/**
 * Submit a label against the version the reviewer saw. On a version
 * conflict the fresh state is fetched and returned for an explicit
 * re-confirm: the reviewer must see what changed underneath them.
 */
export async function submitLabel(
  client: ApiClient,
  sampleKey: string,
  labelPath: string,
  reviewerId: string,
  baseVersion: number,
  options: { note?: string; suggestionsRevealed?: boolean; token?: string } = {},
): Promise<SubmitResult> {
  try {
    const state = await client.postLabel(
      sampleKey,
      {
        label_path: labelPath,
        reviewer_id: reviewerId,
        base_version: baseVersion,
        note: options.note ?? null,
        suggestions_revealed: options.suggestionsRevealed ?? null,
      },
      options.token,
    );
    return { status: "ok", state };
  } catch (error) {
    if (error instanceof VersionConflictError) {
      const detail = await client.getSample(sampleKey);
      return {
        status: "conflict",
        freshState: detail.state,
        message: "label changed underneath you; re-confirm against the new version",
      };
    }
    return { status: "error", message: error instanceof Error ? error.message : String(error) };
  }
}

export interface QueueBadges {
  disagreement: boolean;
  finalized: boolean;
  unreviewed: boolean;
}

export function badgesFor(item: {
  disagreement: boolean;
  finalized: boolean;
  review_count: number;
}): QueueBadges {
  return {
    disagreement: item.disagreement,
    finalized: item.finalized,
    unreviewed: item.review_count === 0,
  };
}
