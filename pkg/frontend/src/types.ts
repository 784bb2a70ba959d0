// Wire types for the pipeline service. These mirror the JSON the server
// emits; nothing here is reformatted client-side.

export type JobStateName =
  | "Created"
  | "Searched"
  | "PreJudged"
  | "AwaitingReview"
  | "Written"
  | "Failed";

export type TermKind = "none" | "fixed_term" | "detention" | "life" | "death";
export type FineKind = "none" | "amount" | "confiscation";

export interface PrisonTermWire {
  kind: TermKind;
  months: number;
}

export interface FineWire {
  kind: FineKind;
  cny: number;
}

export interface ConclusionWire {
  articles: string[];
  charges: string[];
  term: PrisonTermWire;
  fine: FineWire;
  provenance: string;
}

export interface LawArticleWire {
  law_name: string;
  article_no: number;
  sub_no: number | null;
  text: string;
}

export interface CaseElementsWire {
  case_id: string;
  fact: string;
  charges: string[];
  articles: string[];
  term: PrisonTermWire;
  fine: FineWire;
}

export interface CaseDocumentWire {
  case_id: string;
  heading: string;
  fact: string;
  reasoning: string;
  judgment_result: string;
}

export interface ReferenceBundleWire {
  e_case: CaseElementsWire;
  a_ext: LawArticleWire[];
  c_doc: CaseDocumentWire;
}

export interface DocumentWire {
  heading: string;
  fact_section: string;
  reasoning: string;
  judgment_result: string;
  full_text: string;
  source: string;
}

export interface PRFWire {
  precision: number;
  recall: number;
  f1: number;
}

export interface TextSimWire {
  meteor_char: number;
  embed_sim: number;
}

export interface MetricReportWire {
  prison_acc: number;
  fine_acc: number;
  convicting: PRFWire;
  referencing: PRFWire;
  reasoning_sim: TextSimWire;
  result_sim: TextSimWire;
}

export interface JobWire {
  job_id: string;
  fact: string;
  state: JobStateName;
  review_mode: boolean;
  k1: number | null;
  k2: number | null;
  e_ref: ReferenceBundleWire | null;
  j_pre: ConclusionWire | null;
  document: DocumentWire | null;
  report: MetricReportWire | null;
  timestamps: Record<string, number>;
  error: { stage: string; message: string } | null;
  version: number;
}

export interface HealthWire {
  status: string;
  corpus: Record<string, number>;
  backends: Record<string, boolean>;
}

/** Article id as used everywhere by the service: law#no or law#no.sub. */
export function articleId(a: LawArticleWire): string {
  const base = `${a.law_name}#${a.article_no}`;
  return a.sub_no == null ? base : `${base}.${a.sub_no}`;
}
