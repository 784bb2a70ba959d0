// DOM wiring for the review console. Three panes mirror the pipeline:
// what was retrieved, the conclusion under review, the written document.

import { ApiClient } from "./api.js";
import { LocalValidationError, ReviewSession } from "./session.js";
import type { BufferField } from "./conclusion.js";
import { articleId } from "./types.js";
import type { MetricReportWire } from "./types.js";

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

const FIELD_IDS: Record<BufferField, string> = {
  charges: "edit-charges",
  articles: "edit-articles",
  term: "edit-term",
  fine: "edit-fine",
};

let session: ReviewSession | null = null;

function currentSession(): ReviewSession {
  if (!session) {
    const baseUrl = $<HTMLInputElement>("base-url").value || "http://127.0.0.1:8321";
    session = new ReviewSession(new ApiClient({ baseUrl }));
  }
  return session;
}

function setBusy(busy: boolean): void {
  for (const id of ["submit", "save-edits", "finalize"]) {
    $<HTMLButtonElement>(id).disabled = busy;
  }
}

function renderBanner(): void {
  const el = $("banner");
  const text = session?.banner ?? "";
  el.textContent = text;
  el.style.display = text ? "block" : "none";
}

function renderReference(): void {
  const s = currentSession();
  const ref = s.job?.e_ref;
  $("precedent-heading").textContent = ref?.c_doc.heading ?? "";
  $("precedent-text").textContent = ref
    ? [ref.c_doc.fact, ref.c_doc.reasoning, ref.c_doc.judgment_result].join("\n\n")
    : "尚无检索结果";
  const list = $("external-articles");
  list.textContent = "";
  for (const a of ref?.a_ext ?? []) {
    const item = document.createElement("li");
    item.textContent = `${articleId(a)} ${a.text}`;
    list.appendChild(item);
  }
}

function renderConclusion(): void {
  const s = currentSession();
  for (const field of Object.keys(FIELD_IDS) as BufferField[]) {
    const input = $<HTMLInputElement>(FIELD_IDS[field]);
    input.value = s.buffer?.[field] ?? "";
    const msg = $(`${FIELD_IDS[field]}-msg`);
    msg.textContent = s.validation[field] ?? "";
  }
  $("provenance").textContent = s.job?.j_pre?.provenance ?? "";
  $<HTMLButtonElement>("save-edits").disabled = !s.canSave();
  $<HTMLButtonElement>("finalize").disabled = s.job?.state !== "AwaitingReview";
  $("job-state").textContent = s.job
    ? `${s.job.job_id} · ${s.job.state} · v${s.job.version}`
    : "";
}

function metricsRows(report: MetricReportWire): string[][] {
  const f = (x: number) => x.toFixed(4);
  return [
    ["刑期", f(report.prison_acc)],
    ["罚金", f(report.fine_acc)],
    ["罪名 F1", f(report.convicting.f1)],
    ["法条 F1", f(report.referencing.f1)],
    ["说理相似", f(report.reasoning_sim.meteor_char)],
    ["主文相似", f(report.result_sim.meteor_char)],
  ];
}

function renderDocument(): void {
  const s = currentSession();
  const versions = $("versions");
  versions.textContent = "";
  s.documents.forEach((v, i) => {
    const item = document.createElement("li");
    const link = document.createElement("a");
    link.href = "#";
    link.textContent = `版本 ${i + 1} (${v.jobId} v${v.jobVersion})`;
    link.addEventListener("click", (ev) => {
      ev.preventDefault();
      $("document-text").textContent = v.document.full_text;
    });
    item.appendChild(link);
    versions.appendChild(item);
  });
  const latest = s.documents[s.documents.length - 1];
  $("document-text").textContent = latest?.document.full_text ?? "";

  const table = $<HTMLTableElement>("metrics");
  table.textContent = "";
  table.style.display = s.report ? "table" : "none";
  if (s.report) {
    for (const [label, value] of metricsRows(s.report)) {
      const row = table.insertRow();
      row.insertCell().textContent = label ?? "";
      row.insertCell().textContent = value ?? "";
    }
  }
}

function renderAll(): void {
  renderBanner();
  renderReference();
  renderConclusion();
  renderDocument();
}

async function runAction(action: () => Promise<unknown>): Promise<void> {
  setBusy(true);
  try {
    await action();
  } catch (err) {
    if (!(err instanceof LocalValidationError) && session) {
      session.banner = session.banner ?? String(err);
    }
  } finally {
    setBusy(false);
    renderAll();
  }
}

export function main(): void {
  $<HTMLButtonElement>("submit").addEventListener("click", () => {
    session = null; // a new fact starts a fresh session against the entered URL
    const fact = $<HTMLTextAreaElement>("fact").value;
    const s = currentSession();
    void runAction(async () => {
      await s.submitCase(fact);
      $("fact-msg").textContent = s.validation.fact ?? "";
    });
  });

  for (const field of Object.keys(FIELD_IDS) as BufferField[]) {
    $<HTMLInputElement>(FIELD_IDS[field]).addEventListener("input", (ev) => {
      const s = currentSession();
      if (!s.buffer) return;
      s.setField(field, (ev.target as HTMLInputElement).value);
      renderConclusion();
    });
  }

  $<HTMLButtonElement>("save-edits").addEventListener("click", () => {
    const s = currentSession();
    void runAction(() => s.editConclusion());
  });

  $<HTMLButtonElement>("finalize").addEventListener("click", () => {
    const s = currentSession();
    const gold = $<HTMLTextAreaElement>("gold").value;
    void runAction(() => s.finalizeAndCompare(gold || undefined));
  });

  renderAll();
}

main();
