/**
 * Single-page app wiring. Five screens mirror the annotation workflow:
 * upload data, launch/monitor training, transcribe new recordings, review
 * and correct the proposals, and review gloss suggestions.
 */

import { ApiClient } from "./client.js";
import { exportGlossLine, hasChoices, initGlossReview, isUnknown, selectCandidate, type GlossReviewState } from "./gloss.js";
import { pollJob, progressFraction } from "./jobs.js";
import { editStateFrom, isDirty, submitCorrection, type TranscriptEditState } from "./review.js";
import { addCorpus, emptyWorkspace, setScreen, upsertJob, refreshModels, type Screen, type WorkspaceView } from "./store.js";
import type { JobInfo } from "./types.js";

const SCREENS: Screen[] = ["upload", "train", "transcribe", "review", "gloss"];

const client = new ApiClient("");
let view: WorkspaceView = emptyWorkspace();
let reviewRows: TranscriptEditState[] = [];
let glossReviews: GlossReviewState[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(message: string, isError = false): void {
  const box = el<HTMLDivElement>("banner");
  box.textContent = message;
  box.className = isError ? "banner error" : "banner";
  box.hidden = message === "";
}

function render(): void {
  for (const screen of SCREENS) {
    el(`screen-${screen}`).hidden = screen !== view.active;
    el(`tab-${screen}`).classList.toggle("active", screen === view.active);
  }
  renderJobs();
  renderModels();
  renderCorpora();
  renderReview();
  renderGloss();
}

function renderCorpora(): void {
  const list = el<HTMLUListElement>("corpora-list");
  list.replaceChildren(
    ...view.corpora.map((c) => {
      const li = document.createElement("li");
      li.textContent = `${c.corpus_id} — ${c.kind}, ${c.item_count} items`;
      return li;
    }),
  );
  const select = el<HTMLSelectElement>("train-corpus");
  select.replaceChildren(
    ...view.corpora.map((c) => new Option(`${c.corpus_id} (${c.kind})`, c.corpus_id)),
  );
}

function renderJobs(): void {
  const tbody = el<HTMLTableSectionElement>("jobs-body");
  tbody.replaceChildren(
    ...view.jobs.map((job) => {
      const tr = document.createElement("tr");
      const progress = Math.round(progressFraction(job) * 100);
      tr.innerHTML = `
        <td>${job.job_id}</td><td>${job.kind}</td>
        <td class="state-${job.state}">${job.state}</td>
        <td><progress max="100" value="${progress}"></progress> ${progress}%</td>
        <td>${job.result_model_id ?? job.error_message ?? ""}</td>`;
      return tr;
    }),
  );
}

function renderModels(): void {
  for (const id of ["transcribe-model", "gloss-model"]) {
    const select = el<HTMLSelectElement>(id);
    const wanted = id === "transcribe-model" ? "transcription" : "gloss";
    select.replaceChildren(
      ...view.models
        .filter((m) => m.kind === wanted)
        .map((m) => new Option(`${m.model_id} (${m.created_at})`, m.model_id)),
    );
  }
}

function renderReview(): void {
  const tbody = el<HTMLTableSectionElement>("review-body");
  tbody.replaceChildren(
    ...reviewRows.map((row, index) => {
      const tr = document.createElement("tr");

      const idCell = document.createElement("td");
      idCell.textContent = row.utteranceId;

      const proposedCell = document.createElement("td");
      proposedCell.textContent = row.proposed;

      const editCell = document.createElement("td");
      const input = document.createElement("input");
      input.value = row.edited;
      input.addEventListener("input", () => {
        reviewRows[index] = { ...row, edited: input.value };
        renderReviewControls(tr, reviewRows[index]);
      });
      editCell.append(input);

      const consentCell = document.createElement("td");
      const consent = document.createElement("input");
      consent.type = "checkbox";
      consent.checked = row.consent;
      consent.addEventListener("change", () => {
        reviewRows[index] = { ...reviewRows[index], consent: consent.checked };
      });
      consentCell.append(consent);

      const actionCell = document.createElement("td");
      actionCell.className = "actions";
      const accept = document.createElement("button");
      accept.textContent = "Accept";
      accept.addEventListener("click", () => void submitRow(index, true));
      const save = document.createElement("button");
      save.textContent = "Save edit";
      save.addEventListener("click", () => void submitRow(index, false));
      const status = document.createElement("span");
      status.className = "status";
      actionCell.append(accept, save, status);

      tr.append(idCell, proposedCell, editCell, consentCell, actionCell);
      renderReviewControls(tr, row);
      return tr;
    }),
  );
}

function renderReviewControls(tr: HTMLTableRowElement, row: TranscriptEditState): void {
  const [accept, save] = tr.querySelectorAll("button");
  const status = tr.querySelector<HTMLSpanElement>(".status")!;
  const dirty = isDirty(row);
  accept.disabled = dirty || row.reviewed;
  save.disabled = !dirty;
  status.textContent = row.error ?? (row.reviewed ? "reviewed" : dirty ? "edited" : "");
  status.classList.toggle("error", row.error !== null);
}

async function submitRow(index: number, explicitAccept: boolean): Promise<void> {
  reviewRows[index] = await submitCorrection(client, reviewRows[index], explicitAccept);
  renderReview();
}

function renderGloss(): void {
  const host = el<HTMLDivElement>("gloss-tables");
  host.replaceChildren(
    ...glossReviews.map((state, sentenceIndex) => {
      const table = document.createElement("table");
      const tokens = document.createElement("tr");
      const picks = document.createElement("tr");
      state.suggestions.forEach((suggestion, i) => {
        const th = document.createElement("th");
        th.textContent = suggestion.token;
        tokens.append(th);

        const td = document.createElement("td");
        if (isUnknown(state, i)) td.classList.add("unknown");
        if (!hasChoices(suggestion)) {
          td.textContent = suggestion.candidates[0].gloss.join(" ");
        } else {
          const select = document.createElement("select");
          suggestion.candidates.forEach((candidate, c) => {
            select.append(
              new Option(
                `${candidate.gloss.join(" ")} (${candidate.score.toFixed(3)})`,
                String(c),
              ),
            );
          });
          select.selectedIndex = state.selected[i];
          select.addEventListener("change", () => {
            glossReviews[sentenceIndex] = selectCandidate(state, i, select.selectedIndex);
            renderGloss();
          });
          td.append(select);
        }
        picks.append(td);
      });
      table.append(tokens, picks);

      const exportLine = document.createElement("pre");
      exportLine.textContent = exportGlossLine(state);

      const wrap = document.createElement("div");
      wrap.append(table, exportLine);
      return wrap;
    }),
  );
}

function watchJob(job: JobInfo): void {
  view = upsertJob(view, job);
  render();
  void pollJob(client, job.job_id, {
    intervalMs: 1000,
    onUpdate: (snapshot) => {
      view = upsertJob(view, snapshot);
      render();
    },
    onNetworkError: (error, delay) =>
      banner(`connection lost (${error.message}); retrying in ${delay / 1000}s`, true),
  })
    .then(async () => {
      banner("");
      view = await refreshModels(view, client);
      render();
    })
    .catch((error) => banner(String(error), true));
}

function wireEvents(): void {
  for (const screen of SCREENS) {
    el(`tab-${screen}`).addEventListener("click", () => {
      view = setScreen(view, screen);
      render();
    });
  }

  el<HTMLButtonElement>("upload-button").addEventListener("click", async () => {
    const files = el<HTMLInputElement>("upload-file").files;
    if (!files || files.length === 0) return banner("choose a corpus zip first", true);
    try {
      const manifest = await client.uploadCorpus(files[0]);
      view = addCorpus(view, manifest);
      banner(`uploaded ${manifest.corpus_id}: ${manifest.item_count} items`);
      render();
    } catch (error) {
      banner(String(error), true);
    }
  });

  el<HTMLButtonElement>("train-button").addEventListener("click", async () => {
    const corpusId = el<HTMLSelectElement>("train-corpus").value;
    const kind = el<HTMLSelectElement>("train-kind").value as "transcription" | "gloss";
    if (!corpusId) return banner("upload a corpus first", true);
    try {
      watchJob(await client.submitJob({ kind, corpus_id: corpusId }));
    } catch (error) {
      banner(String(error), true);
    }
  });

  el<HTMLButtonElement>("transcribe-button").addEventListener("click", async () => {
    const modelId = el<HTMLSelectElement>("transcribe-model").value;
    const files = el<HTMLInputElement>("transcribe-file").files;
    if (!modelId || !files || files.length === 0) {
      return banner("pick a model and a WAV file", true);
    }
    try {
      const items = await client.transcribe(modelId, files[0]);
      reviewRows = items.map(editStateFrom);
      view = setScreen(view, "review");
      render();
    } catch (error) {
      banner(String(error), true);
    }
  });

  el<HTMLButtonElement>("gloss-button").addEventListener("click", async () => {
    const modelId = el<HTMLSelectElement>("gloss-model").value;
    const text = el<HTMLTextAreaElement>("gloss-input").value;
    const sentences = text.split("\n").filter((line) => line.trim() !== "");
    if (!modelId || sentences.length === 0) {
      return banner("pick a gloss model and enter sentences", true);
    }
    try {
      const results = await client.gloss(modelId, sentences, 5);
      glossReviews = results.map(initGlossReview);
      render();
    } catch (error) {
      banner(String(error), true);
    }
  });
}

async function start(): Promise<void> {
  wireEvents();
  try {
    view = await refreshModels(view, client);
  } catch {
    banner("backend unreachable; is the service running?", true);
  }
  render();
}

document.addEventListener("DOMContentLoaded", () => void start());
