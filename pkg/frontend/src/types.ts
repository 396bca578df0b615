// Wire formats of the review service and the record JSONL schema.

export type EditOpKind = "match" | "substitute" | "insert" | "delete";

export interface EditOp {
  kind: EditOpKind;
  hyp_index: number | null;
  ref_index: number | null;
}

export interface CerDict {
  substitutions: number;
  deletions: number;
  insertions: number;
  matches: number;
  ref_len: number;
  hyp_len: number;
  cer: number | null;
  ops: EditOp[];
}

export interface CandidateScore {
  text: string;
  lm_logp: number;
  ctx_score: number;
  phon_bonus: number;
  total: number;
}

export interface Decision {
  char_range: [number, number];
  syllables: string[];
  trigger: string | null;
  candidates: CandidateScore[];
  chosen: string;
  evidence: string[];
  fallback: boolean;
}

export interface VisualContextJson {
  subtitle_text: string | null;
  background_text: string[];
  caption: string | null;
  keywords: Record<string, number>;
}

export interface PhoneticTokenJson {
  text: string;
  span: [number, number];
  syllable: string | null;
  oov: boolean;
}

export interface RecordJson {
  schema: string;
  sample_id: string;
  media_refs: { audio?: string; video?: string };
  perception: {
    visual: VisualContextJson;
    phonetic: { source_text: string; tokens: PhoneticTokenJson[] };
  };
  reasoning: {
    text: string;
    decisions: Decision[];
    eliminated: [string, string][][];
  };
  transcription: string;
  chain_scores: {
    logp_perception: number;
    logp_reasoning: number;
    logp_transcription: number;
    logp_joint: number;
  } | null;
  provenance: {
    asr_hyp_primary: string;
    asr_hyp_secondary: string;
    aligned_hyp_primary: string;
    aligned_hyp_secondary: string;
    cer: CerDict | null;
    gate_decision: string;
    suitability_reason: string;
    annotators: Record<string, string>;
  };
}

export type Status = "pending" | "accepted" | "rejected" | "edited";
export type VerdictAction = "accept" | "reject" | "edit";

export interface ReviewItemJson {
  sample_id: string;
  status: Status;
  edited_transcription: string | null;
  reviewer: string | null;
  verdict_time: number | null;
  machine_reason: string;
  history: unknown[];
  record: RecordJson;
}

export interface ItemPage {
  total: number;
  page: number;
  page_size: number;
  items: ReviewItemJson[];
}

export interface Stats {
  pending: number;
  accepted: number;
  rejected: number;
  edited: number;
  total: number;
}
