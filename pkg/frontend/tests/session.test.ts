import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, ConflictError, type FetchLike } from "../src/api.js";
import { LocalValidationError, ReviewSession } from "../src/session.js";
import type {
  ConclusionWire,
  JobWire,
  MetricReportWire,
  ReferenceBundleWire,
} from "../src/types.js";

const SAMPLE_REF: ReferenceBundleWire = {
  e_case: {
    case_id: "prec-1",
    fact: "被告人李某盗窃财物。",
    charges: ["盗窃罪"],
    articles: ["刑法#264"],
    term: { kind: "fixed_term", months: 8 },
    fine: { kind: "amount", cny: 2000 },
  },
  a_ext: [{ law_name: "刑法", article_no: 52, sub_no: null, text: "第五十二条……" }],
  c_doc: {
    case_id: "prec-1",
    heading: "某市人民法院刑事判决书（prec-1）",
    fact: "被告人李某盗窃财物。",
    reasoning: "本院认为……",
    judgment_result: "判决如下……",
  },
};

const SAMPLE_JPRE: ConclusionWire = {
  articles: ["刑法#264", "刑法#52"],
  charges: ["盗窃罪"],
  term: { kind: "fixed_term", months: 8 },
  fine: { kind: "amount", cny: 2000 },
  provenance: "generated",
};

const ALL_ONES: MetricReportWire = {
  prison_acc: 1,
  fine_acc: 1,
  convicting: { precision: 1, recall: 1, f1: 1 },
  referencing: { precision: 1, recall: 1, f1: 1 },
  reasoning_sim: { meteor_char: 1, embed_sim: 1 },
  result_sim: { meteor_char: 1, embed_sim: 1 },
};

/** Tiny in-memory stand-in for the service, close enough for the client. */
class FakeServer {
  jobs = new Map<string, JobWire>();
  requests: string[] = [];
  lastPutBody: { patch: Record<string, unknown>; expected_version: number } | null = null;
  failStage: string | null = null;
  rejectTerm: string | null = null;
  finalizeBeforeNextEdit = false;
  private n = 0;

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(url).pathname;
    this.requests.push(`${method} ${path}`);
    const body = init?.body ? JSON.parse(String(init.body)) : {};

    if (method === "POST" && path === "/v1/jobs") {
      const job: JobWire = {
        job_id: `job-${++this.n}`,
        fact: body.fact,
        state: "Created",
        review_mode: body.review_mode,
        k1: body.k1,
        k2: body.k2,
        e_ref: null,
        j_pre: null,
        document: null,
        report: null,
        timestamps: { Created: 1 },
        error: null,
        version: 1,
      };
      this.jobs.set(job.job_id, job);
      return json(job, 201);
    }

    const m = /^\/v1\/jobs\/([^/]+)(\/(advance|conclusion|evaluate))?$/.exec(path);
    if (!m || !m[1]) return error(404, "JobNotFoundError", "no such route");
    const job = this.jobs.get(m[1]);
    if (!job) return error(404, "JobNotFoundError", `unknown job ${m[1]}`);

    if (method === "GET" && !m[3]) return json(job);

    if (method === "POST" && m[3] === "advance") {
      if (job.state === "Written" || job.state === "Failed") {
        return error(409, "InvalidTransitionError", `job is ${job.state}`);
      }
      if (body.target_stage === "AwaitingReview") {
        const next: JobWire = this.failStage
          ? {
              ...job,
              state: "Failed",
              error: { stage: this.failStage, message: "injected failure" },
              version: job.version + 1,
            }
          : {
              ...job,
              state: "AwaitingReview",
              e_ref: SAMPLE_REF,
              j_pre: { ...SAMPLE_JPRE },
              version: job.version + 3,
            };
        this.jobs.set(job.job_id, next);
        return json(next);
      }
      if (body.target_stage === "Written") {
        if (job.state !== "AwaitingReview" || !job.j_pre) {
          return error(409, "InvalidTransitionError", `job is ${job.state}`);
        }
        const next = this.finish(job);
        return json(next);
      }
      return error(422, "ValueError", `unsupported target ${body.target_stage}`);
    }

    if (method === "PUT" && m[3] === "conclusion") {
      if (this.finalizeBeforeNextEdit && job.state === "AwaitingReview") {
        this.finalizeBeforeNextEdit = false;
        this.finish(job); // someone else won the race
        return error(409, "ConflictError", `job ${job.job_id} is Written, not AwaitingReview`);
      }
      if (job.state !== "AwaitingReview" || !job.j_pre) {
        return error(409, "ConflictError", `job ${job.job_id} is ${job.state}, not AwaitingReview`);
      }
      this.lastPutBody = body;
      if (body.expected_version !== job.version) {
        return error(
          409,
          "ConflictError",
          `job is at version ${job.version}, edit was against ${body.expected_version}`,
        );
      }
      const j = { ...job.j_pre };
      for (const [field, value] of Object.entries(body.patch as Record<string, unknown>)) {
        if (field === "term") {
          if (this.rejectTerm === value) {
            return error(422, "InvalidEditError", "invalid edit to term: cannot parse");
          }
          const months = /\d+/.exec(String(value));
          j.term =
            value === "无"
              ? { kind: "none", months: 0 }
              : { kind: "fixed_term", months: Number(months?.[0] ?? 0) };
        } else if (field === "fine") {
          const cny = /\d+/.exec(String(value));
          j.fine = value === "无" ? { kind: "none", cny: 0 } : { kind: "amount", cny: Number(cny?.[0] ?? 0) };
        } else if (field === "charges") {
          j.charges = value as string[];
        } else if (field === "articles") {
          j.articles = value as string[];
        } else {
          return error(422, "InvalidEditError", `invalid edit to ${field}: unknown field`);
        }
      }
      j.provenance = "human_edited";
      const next = { ...job, j_pre: j, version: job.version + 1 };
      this.jobs.set(job.job_id, next);
      return json(next);
    }

    if (method === "POST" && m[3] === "evaluate") {
      if (job.state !== "Written") {
        return error(409, "InvalidStateError", `job is ${job.state}; evaluation needs Written`);
      }
      const next = { ...job, report: ALL_ONES, version: job.version + 1 };
      this.jobs.set(job.job_id, next);
      return json(next);
    }

    return error(404, "JobNotFoundError", "no such route");
  };

  private finish(job: JobWire): JobWire {
    const months = job.j_pre?.term.months ?? 0;
    const text = `某市人民法院刑事判决书\n经审理查明……\n本院认为……\n判决如下：判处有期徒刑${months}个月。`;
    const next: JobWire = {
      ...job,
      state: "Written",
      document: {
        heading: "某市人民法院刑事判决书",
        fact_section: "经审理查明……",
        reasoning: "本院认为……",
        judgment_result: `判决如下：判处有期徒刑${months}个月。`,
        full_text: text,
        source: "generated",
      },
      version: job.version + 1,
    };
    this.jobs.set(job.job_id, next);
    return next;
  }
}

function json(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

function error(status: number, errorType: string, detail: string): Response {
  return json({ error: errorType, detail }, status);
}

const DOCUMENTED = [
  /^POST \/v1\/jobs$/,
  /^POST \/v1\/jobs\/[^/]+\/advance$/,
  /^PUT \/v1\/jobs\/[^/]+\/conclusion$/,
  /^GET \/v1\/jobs\/[^/]+$/,
  /^POST \/v1\/jobs\/[^/]+\/evaluate$/,
];

function newSession(server: FakeServer): ReviewSession {
  const client = new ApiClient({ baseUrl: "http://fake", fetchImpl: server.fetch });
  return new ReviewSession(client, { pollIntervalMs: 1, pollTimeoutMs: 2000 });
}

describe("submit", () => {
  it("rejects an empty fact locally, without any request", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await expect(session.submitCase("   ")).rejects.toBeInstanceOf(LocalValidationError);
    expect(session.validation.fact).toBeTruthy();
    expect(server.requests).toEqual([]);
  });

  it("parks at the review checkpoint with the buffer filled from the server", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    const job = await session.submitCase("被告人张某盗窃。");
    expect(job.state).toBe("AwaitingReview");
    expect(session.buffer).toEqual({
      charges: "盗窃罪",
      articles: "刑法#264;刑法#52",
      term: "有期徒刑8个月",
      fine: "人民币2000元",
    });
    expect(session.job?.e_ref?.c_doc.case_id).toBe("prec-1");
    // every transition went through a documented endpoint
    for (const line of server.requests) {
      expect(DOCUMENTED.some((re) => re.test(line)), line).toBe(true);
    }
  });

  it("surfaces a stage failure as a banner naming the stage", async () => {
    const server = new FakeServer();
    server.failStage = "prejudge";
    const session = newSession(server);
    const job = await session.submitCase("被告人张某盗窃。");
    expect(job.state).toBe("Failed");
    expect(session.banner).toContain("prejudge");
    expect(session.banner).toContain("injected failure");
  });
});

describe("edits", () => {
  it("keeps invalid values local: no PUT is sent", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    const before = server.requests.length;
    session.setField("term", "乱写一通");
    expect(session.canSave()).toBe(false);
    await expect(session.editConclusion()).rejects.toBeInstanceOf(LocalValidationError);
    expect(session.validation.term).toBeTruthy();
    expect(server.requests.length).toBe(before);
  });

  it("PUTs only the dirty field with the version the edit was based on", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    const parked = await session.submitCase("被告人张某盗窃。");
    session.setField("term", "有期徒刑10个月");
    const updated = await session.editConclusion();
    expect(server.lastPutBody).toEqual({
      patch: { term: "有期徒刑10个月" },
      expected_version: parked.version,
    });
    expect(updated.j_pre?.term).toEqual({ kind: "fixed_term", months: 10 });
    expect(updated.j_pre?.provenance).toBe("human_edited");
    // the refreshed buffer is the server value round-tripped, not a reformat
    expect(session.buffer?.term).toBe("有期徒刑10个月");
  });

  it("saves an untouched buffer as an empty patch", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    const updated = await session.editConclusion();
    expect(server.lastPutBody?.patch).toEqual({});
    expect(updated.j_pre?.provenance).toBe("human_edited");
  });

  it("maps a server rejection onto the offending field", async () => {
    const server = new FakeServer();
    server.rejectTerm = "有期徒刑999个月";
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    session.setField("term", "有期徒刑999个月");
    await expect(session.editConclusion()).rejects.toBeInstanceOf(ApiError);
    expect(session.validation.term).toContain("invalid edit to term");
  });

  it("turns a lost race into Conflict and refreshes to the winner's state", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    session.setField("term", "有期徒刑10个月");
    server.finalizeBeforeNextEdit = true;
    await expect(session.editConclusion()).rejects.toBeInstanceOf(ConflictError);
    expect(session.banner).toContain("冲突");
    expect(session.job?.state).toBe("Written");
  });
});

describe("finalize", () => {
  it("appends a document version and reports metrics against gold", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    const { job, report } = await session.finalizeAndCompare("某份对照文书全文");
    expect(job.state).toBe("Written");
    expect(session.documents).toHaveLength(1);
    expect(session.documents[0]?.document.full_text).toContain("有期徒刑8个月");
    expect(report?.prison_acc).toBe(1);
    expect(session.report?.convicting.f1).toBe(1);
  });

  it("skips the metrics panel when no gold is given", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    const { report } = await session.finalizeAndCompare();
    expect(report).toBeNull();
    expect(session.report).toBeNull();
  });

  it("re-finalizing after another edit lists a second document version", async () => {
    const server = new FakeServer();
    const session = newSession(server);
    await session.submitCase("被告人张某盗窃。");
    await session.finalize();
    const first = session.documents[0];
    const done = await session.refinalizeWithEdits({ term: "有期徒刑20个月" });
    expect(done.state).toBe("Written");
    expect(session.documents).toHaveLength(2);
    expect(session.documents[1]?.jobId).not.toBe(first?.jobId);
    expect(session.documents[1]?.document.full_text).toContain("有期徒刑20个月");
  });
});
