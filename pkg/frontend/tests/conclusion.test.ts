import { describe, expect, it } from "vitest";

import {
  bufferFromConclusion,
  finePhrase,
  isSubmittable,
  patchFromBuffer,
  rejectedField,
  termPhrase,
  validateBuffer,
  type EditBuffer,
} from "../src/conclusion.js";
import type { ConclusionWire } from "../src/types.js";

const conclusion: ConclusionWire = {
  articles: ["刑法#264", "刑法#52"],
  charges: ["盗窃罪"],
  term: { kind: "fixed_term", months: 8 },
  fine: { kind: "amount", cny: 2000 },
  provenance: "generated",
};

describe("phrasing", () => {
  it("renders every term kind", () => {
    expect(termPhrase({ kind: "none", months: 0 })).toBe("无");
    expect(termPhrase({ kind: "fixed_term", months: 40 })).toBe("有期徒刑40个月");
    expect(termPhrase({ kind: "detention", months: 4 })).toBe("拘役4个月");
    expect(termPhrase({ kind: "life", months: 0 })).toBe("无期徒刑");
    expect(termPhrase({ kind: "death", months: 0 })).toBe("死刑");
  });

  it("renders every fine kind", () => {
    expect(finePhrase({ kind: "none", cny: 0 })).toBe("无");
    expect(finePhrase({ kind: "amount", cny: 2000 })).toBe("人民币2000元");
    expect(finePhrase({ kind: "confiscation", cny: 0 })).toBe("没收个人全部财产");
  });

  it("builds the edit buffer from the server conclusion", () => {
    expect(bufferFromConclusion(conclusion)).toEqual({
      charges: "盗窃罪",
      articles: "刑法#264;刑法#52",
      term: "有期徒刑8个月",
      fine: "人民币2000元",
    });
  });
});

describe("local validation", () => {
  const valid = bufferFromConclusion(conclusion);

  it("accepts the canonical buffer", () => {
    expect(validateBuffer(valid)).toEqual({});
    expect(isSubmittable(valid)).toBe(true);
  });

  it.each<[Partial<EditBuffer>, keyof EditBuffer]>([
    [{ charges: "" }, "charges"],
    [{ charges: "盗窃" }, "charges"],
    [{ articles: "" }, "articles"],
    [{ articles: "刑法264" }, "articles"],
    [{ articles: "刑法#0" }, "articles"],
    [{ articles: "刑法#264.0" }, "articles"],
    [{ term: "乱写一通" }, "term"],
    [{ term: "有期徒刑" }, "term"],
    [{ fine: "很多钱" }, "fine"],
  ])("rejects %o", (patch, field) => {
    const buffer = { ...valid, ...patch };
    expect(validateBuffer(buffer)).toHaveProperty(field);
    expect(isSubmittable(buffer)).toBe(false);
  });

  it.each<Partial<EditBuffer>>([
    { term: "无" },
    { term: "免予刑事处罚" },
    { term: "有期徒刑三年六个月" },
    { term: "拘役4个月" },
    { term: "18" },
    { fine: "无" },
    { fine: "没收个人全部财产" },
    { fine: "人民币五千元" },
    { fine: "8000" },
    { articles: "刑法#264.1;道路交通安全法#91" },
    { charges: "盗窃罪;抢夺罪" },
  ])("accepts %o", (patch) => {
    expect(validateBuffer({ ...valid, ...patch })).toEqual({});
  });
});

describe("patches", () => {
  const base = bufferFromConclusion(conclusion);

  it("is empty for an untouched buffer", () => {
    expect(patchFromBuffer(base, conclusion)).toEqual({});
  });

  it("contains only the dirty fields", () => {
    const buffer = { ...base, term: "有期徒刑40个月" };
    expect(patchFromBuffer(buffer, conclusion)).toEqual({ term: "有期徒刑40个月" });
  });

  it("sends list fields as arrays", () => {
    const buffer = { ...base, charges: "盗窃罪; 抢夺罪", articles: "刑法#263" };
    expect(patchFromBuffer(buffer, conclusion)).toEqual({
      charges: ["盗窃罪", "抢夺罪"],
      articles: ["刑法#263"],
    });
  });

  it("ignores whitespace-only drift", () => {
    const buffer = { ...base, term: ` ${base.term} ` };
    expect(patchFromBuffer(buffer, conclusion)).toEqual({});
  });
});

describe("server rejection mapping", () => {
  it("names the rejected field", () => {
    expect(rejectedField("invalid edit to term: no parse")).toBe("term");
    expect(rejectedField("invalid edit to charges: empty")).toBe("charges");
  });

  it("returns null for anything else", () => {
    expect(rejectedField("invalid edit to verdict: unknown field")).toBeNull();
    expect(rejectedField("boom")).toBeNull();
  });
});
