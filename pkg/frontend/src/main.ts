/** Application bootstrap: wires the API client, queue, detail pane,
 * picker, and keyboard handling together. */

import { ApiClient, FailurePage, SampleDetail } from "./api.js";
import { actionForKey } from "./keyboard.js";
import {
  renderDetail,
  renderDisagreements,
  renderErrorBanner,
  renderPicker,
  renderQueue,
} from "./render.js";
import {
  RevealTracker,
  filtersFromQuery,
  filtersToQuery,
  submitLabel,
} from "./state.js";
import {
  TaxonomyCatalog,
  acceptWithoutTertiary,
  advancePicker,
  optionsFor,
  startPicker,
  PickerState,
} from "./taxonomy.js";

const REFRESH_MS = 15_000;

interface AppState {
  location: ReturnType<typeof filtersFromQuery>;
  page: FailurePage | null;
  selectedKey: string | null;
  detail: SampleDetail | null;
  picker: PickerState | null;
  error: string | null;
}

async function boot(): Promise<void> {
  const client = new ApiClient("");
  const reveal = new RevealTracker();
  const catalog = new TaxonomyCatalog(await client.getTaxonomy());

  const queueBox = document.getElementById("queue")!;
  const detailBox = document.getElementById("detail")!;
  const pickerBox = document.getElementById("picker")!;
  const disagreementsBox = document.getElementById("disagreements")!;
  const bannerBox = document.getElementById("banner")!;
  const runSelect = document.getElementById("run-select") as HTMLSelectElement;
  const filterForm = document.getElementById("filters") as HTMLFormElement;
  const reviewerInput = document.getElementById("reviewer") as HTMLInputElement;
  const tokenInput = document.getElementById("token") as HTMLInputElement;
  const noteInput = document.getElementById("note") as HTMLInputElement;

  const state: AppState = {
    location: filtersFromQuery(window.location.search),
    page: null,
    selectedKey: null,
    detail: null,
    picker: null,
    error: null,
  };

  async function refreshRuns(): Promise<void> {
    const runs = await client.listRuns();
    runSelect.replaceChildren();
    for (const run of runs) {
      const option = document.createElement("option");
      option.value = run.run_id;
      option.textContent = `${run.run_id} (${run.record_count})`;
      runSelect.append(option);
    }
    if (!state.location.runId && runs.length) {
      state.location.runId = runs[0].run_id;
    }
    runSelect.value = state.location.runId;
  }

  function syncUrl(): void {
    const query = filtersToQuery(state.location.runId, state.location.filters,
                                 state.location.page);
    history.replaceState(null, "", `?${query}`);
  }

  async function refreshQueue(): Promise<void> {
    if (!state.location.runId) return;
    try {
      state.page = await client.listFailures(
        state.location.runId, state.location.filters, state.location.page);
      state.error = null;
    } catch (error) {
      // never show stale data as fresh: drop the queue with the banner
      state.page = null;
      state.error = error instanceof Error ? error.message : String(error);
    }
    draw();
  }

  async function openSample(key: string): Promise<void> {
    state.selectedKey = key;
    state.detail = await client.getSample(key);
    const letter = state.detail.state.label_path?.[0] ?? null;
    state.picker = startPicker(letter === "P" ? null : letter);
    draw();
  }

  async function submitCurrent(): Promise<void> {
    if (!state.detail || !state.picker?.path) return;
    const detail = state.detail;
    const result = await submitLabel(
      client, detail.sample_key, state.picker.path,
      reviewerInput.value || "anonymous", detail.state.version,
      {
        note: noteInput.value || undefined,
        suggestionsRevealed: reveal.wasRevealed(detail.sample_key),
        token: tokenInput.value || undefined,
      },
    );
    if (result.status === "conflict") {
      state.error = result.message;
      state.detail = await client.getSample(detail.sample_key);
    } else if (result.status === "error") {
      state.error = result.message;
    } else {
      state.error = null;
      noteInput.value = "";
      state.detail = await client.getSample(detail.sample_key);
      await refreshQueue();
    }
    draw();
  }

  async function refreshDisagreements(): Promise<void> {
    if (!state.location.runId) return;
    try {
      const rows = await client.getDisagreements(state.location.runId);
      renderDisagreements(disagreementsBox, rows, (key) => void openSample(key));
    } catch {
      /* banner already covers API trouble */
    }
  }

  function draw(): void {
    renderErrorBanner(bannerBox, state.error, () => void refreshQueue());
    renderQueue(queueBox, state.page?.items ?? [], state.selectedKey,
                (key) => void openSample(key));
    if (state.detail) {
      renderDetail(detailBox, state.detail, {
        revealed: reveal.wasRevealed(state.detail.sample_key),
        onReveal: () => {
          reveal.markRevealed(state.detail!.sample_key);
          draw();
        },
      });
    }
    if (state.picker) {
      renderPicker(pickerBox, state.picker, optionsFor(catalog, state.picker),
                   (code) => {
                     state.picker = advancePicker(catalog, state.picker!, code);
                     draw();
                   });
    }
  }

  document.addEventListener("keydown", (event) => {
    const inText = event.target instanceof HTMLInputElement
      || event.target instanceof HTMLTextAreaElement;
    const action = actionForKey(event.key, inText);
    if (action.kind === "none") return;
    event.preventDefault();
    if (action.kind === "pick" && state.picker) {
      const options = optionsFor(catalog, state.picker);
      const chosen = options.find((o) => o.key === action.key);
      if (chosen) {
        state.picker = advancePicker(catalog, state.picker, chosen.code);
        draw();
      }
    } else if (action.kind === "skip-tertiary" && state.picker) {
      state.picker = acceptWithoutTertiary(state.picker);
      draw();
    } else if (action.kind === "submit") {
      void submitCurrent();
    } else if (action.kind === "reveal" && state.detail) {
      reveal.markRevealed(state.detail.sample_key);
      draw();
    } else if ((action.kind === "next" || action.kind === "prev") && state.page) {
      const items = state.page.items;
      const index = items.findIndex((i) => i.sample_key === state.selectedKey);
      const next = action.kind === "next"
        ? Math.min(items.length - 1, index + 1)
        : Math.max(0, index - 1);
      if (items[next]) void openSample(items[next].sample_key);
    }
  });

  filterForm.addEventListener("change", () => {
    const data = new FormData(filterForm);
    state.location.filters = {
      primary: (data.get("primary") as string) || undefined,
      secondary: (data.get("secondary") as string) || undefined,
      model: (data.get("model") as string) || undefined,
      unreviewedOnly: data.get("unreviewed") === "on",
    };
    state.location.page = 1;
    syncUrl();
    void refreshQueue();
    void refreshDisagreements();
  });

  runSelect.addEventListener("change", () => {
    state.location.runId = runSelect.value;
    state.location.page = 1;
    syncUrl();
    void refreshQueue();
    void refreshDisagreements();
  });

  await refreshRuns();
  syncUrl();
  await refreshQueue();
  await refreshDisagreements();
  setInterval(() => {
    void refreshQueue();
    void refreshDisagreements();
  }, REFRESH_MS);
}

void boot();
