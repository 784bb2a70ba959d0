// One reviewer working one case through the service: submit, wait for the
// review checkpoint, edit the conclusion, finalize, compare. All state the
// console displays lives here and every transition goes through ApiClient.

import { ApiClient, ApiError, ConflictError } from "./api.js";
import {
  bufferFromConclusion,
  isSubmittable,
  patchFromBuffer,
  rejectedField,
  validateBuffer,
  type BufferField,
  type EditBuffer,
  type FieldMessages,
} from "./conclusion.js";
import type { DocumentWire, JobWire, MetricReportWire } from "./types.js";

export interface SessionOptions {
  pollIntervalMs?: number;
  pollTimeoutMs?: number;
}

/** One synthesis result; re-finalizing appends rather than replaces. */
export interface DocumentVersion {
  jobId: string;
  jobVersion: number;
  document: DocumentWire;
}

export class LocalValidationError extends Error {
  constructor(readonly messages: FieldMessages) {
    super("local validation failed");
    this.name = "LocalValidationError";
  }
}

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class ReviewSession {
  job: JobWire | null = null;
  buffer: EditBuffer | null = null;
  validation: FieldMessages = {};
  banner: string | null = null;
  documents: DocumentVersion[] = [];
  report: MetricReportWire | null = null;

  private readonly pollIntervalMs: number;
  private readonly pollTimeoutMs: number;

  constructor(
    readonly client: ApiClient,
    opts: SessionOptions = {},
  ) {
    this.pollIntervalMs = opts.pollIntervalMs ?? 400;
    this.pollTimeoutMs = opts.pollTimeoutMs ?? 30_000;
  }

  /** Create a review-mode job and wait at the review checkpoint. */
  async submitCase(fact: string): Promise<JobWire> {
    this.banner = null;
    this.report = null;
    if (!fact.trim()) {
      this.validation = { fact: "案件事实不能为空" };
      throw new LocalValidationError(this.validation);
    }
    this.validation = {};
    const created = await this.client.createJob(fact, { reviewMode: true });
    this.job = created;
    await this.client.advance(created.job_id, "AwaitingReview");
    const job = await this.pollUntil(
      (j) => j.state === "AwaitingReview" || j.state === "Failed",
    );
    this.adopt(job, { resetBuffer: true });
    if (job.state === "Failed") {
      this.banner = `阶段 ${job.error?.stage ?? "?"} 失败: ${job.error?.message ?? ""}`;
    }
    return job;
  }

  setField(field: BufferField, value: string): void {
    if (!this.buffer) throw new Error("no conclusion to edit yet");
    this.buffer = { ...this.buffer, [field]: value };
    this.validation = validateBuffer(this.buffer);
  }

  /** The buffer patch may be sent only when it validates locally. */
  canSave(): boolean {
    return this.buffer !== null && isSubmittable(this.buffer);
  }

  /**
   * Send the dirty fields with the version this edit was based on. A 409
   * means someone else moved the job first: the view refreshes to the
   * server's state before the error is re-thrown.
   */
  async editConclusion(): Promise<JobWire> {
    const job = this.requireJob();
    if (!this.buffer || !job.j_pre) throw new Error("job has no conclusion yet");
    const messages = validateBuffer(this.buffer);
    if (Object.keys(messages).length > 0) {
      this.validation = messages;
      throw new LocalValidationError(messages);
    }
    const patch = patchFromBuffer(this.buffer, job.j_pre);
    try {
      const updated = await this.client.putConclusion(job.job_id, patch, job.version);
      this.adopt(updated, { resetBuffer: true });
      return updated;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.banner = `编辑冲突: ${err.detail}`;
        await this.refresh({ resetBuffer: true });
        throw err;
      }
      if (err instanceof ApiError) {
        const field = rejectedField(err.detail);
        if (field) {
          this.validation = { ...this.validation, [field]: err.detail };
        } else {
          this.banner = err.message;
        }
      }
      throw err;
    }
  }

  /** Advance the parked job to the final document. */
  async finalize(): Promise<JobWire> {
    const job = this.requireJob();
    await this.client.advance(job.job_id, "Written");
    const done = await this.pollUntil(
      (j) => j.state === "Written" || j.state === "Failed",
    );
    this.adopt(done, { resetBuffer: true });
    if (done.state === "Failed") {
      this.banner = `阶段 ${done.error?.stage ?? "?"} 失败: ${done.error?.message ?? ""}`;
    } else if (done.document) {
      this.documents.push({
        jobId: done.job_id,
        jobVersion: done.version,
        document: done.document,
      });
    }
    return done;
  }

  /** Finalize, then score against gold text when one is supplied. */
  async finalizeAndCompare(
    goldText?: string,
  ): Promise<{ job: JobWire; report: MetricReportWire | null }> {
    const job = await this.finalize();
    if (job.state !== "Written" || !goldText?.trim()) {
      return { job, report: null };
    }
    return { job, report: await this.compareWith(goldText) };
  }

  /** Score the finished document against arbitrary gold text. */
  async compareWith(goldText: string): Promise<MetricReportWire> {
    const job = this.requireJob();
    const scored = await this.client.evaluateJob(job.job_id, goldText);
    this.adopt(scored, { resetBuffer: false });
    this.report = scored.report;
    if (!scored.report) throw new Error("evaluation returned no report");
    return scored.report;
  }

  /**
   * Second thoughts after finalizing: a Written job is immutable, so the
   * edits go into a fresh review job on the same facts, and its document
   * joins the version list for side-by-side comparison.
   */
  async refinalizeWithEdits(edits: Partial<EditBuffer>): Promise<JobWire> {
    const previous = this.requireJob();
    if (previous.state !== "Written") {
      throw new Error("refinalize only follows a finished document");
    }
    const parked = await this.submitCase(previous.fact);
    if (parked.state !== "AwaitingReview") return parked;
    for (const [field, value] of Object.entries(edits)) {
      this.setField(field as BufferField, value);
    }
    await this.editConclusion();
    return this.finalize();
  }

  async refresh(opts: { resetBuffer?: boolean } = {}): Promise<JobWire> {
    const job = this.requireJob();
    const fresh = await this.client.getJob(job.job_id);
    this.adopt(fresh, { resetBuffer: opts.resetBuffer ?? false });
    return fresh;
  }

  private requireJob(): JobWire {
    if (!this.job) throw new Error("no active job in this session");
    return this.job;
  }

  private adopt(job: JobWire, opts: { resetBuffer: boolean }): void {
    this.job = job;
    if (job.j_pre && (opts.resetBuffer || this.buffer === null)) {
      this.buffer = bufferFromConclusion(job.j_pre);
      this.validation = {};
    }
  }

  private async pollUntil(done: (job: JobWire) => boolean): Promise<JobWire> {
    const job = this.requireJob();
    const deadline = Date.now() + this.pollTimeoutMs;
    let latest = await this.client.getJob(job.job_id);
    while (!done(latest)) {
      if (Date.now() >= deadline) {
        throw new Error(`timed out waiting on job ${job.job_id} (${latest.state})`);
      }
      await sleep(this.pollIntervalMs);
      latest = await this.client.getJob(job.job_id);
    }
    return latest;
  }
}
