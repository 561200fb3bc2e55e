/** Payload shapes mirrored from the /api/v1 service. */

export interface FeatureSpec {
  name: string;
  min: number;
  max: number;
}

export interface SchemaView {
  features: FeatureSpec[];
  passthrough: string[];
}

export interface TreeLeaf {
  label: 0 | 1;
  n: number;
  pos: number;
  neg: number;
}

export interface TreeInternal {
  test: string;
  n: number;
  pos: number;
  neg: number;
  children: { B1: TreeNode; B2: TreeNode; B3: TreeNode };
}

export type TreeNode = TreeLeaf | TreeInternal;

export function isLeaf(node: TreeNode): node is TreeLeaf {
  return (node as TreeLeaf).label !== undefined && !(node as TreeInternal).children;
}

export interface PartitionView {
  id: number;
  centroid: number[];
  m_j: number;
  n_pos: number;
  stats: {
    fnr: number;
    fpr: number;
    mean_cost: number;
    combined: number;
    n_pos: number;
    n_evaluated: number;
  };
  tree: TreeNode;
}

export interface PolicyView {
  format_version: number;
  config: Record<string, unknown>;
  costs: { tests: Record<string, number>; gamma: number };
  tests: string[];
  schema: SchemaView;
  partitions: PartitionView[];
}

export interface DiagnosisView {
  label: 0 | 1;
  interval: [number, number];
}

export interface SessionView {
  session_id: string;
  partition_id: number;
  status: "awaiting_outcome" | "final";
  recommended_test: string | null;
  final_label: 0 | 1 | null;
  diagnosis: DiagnosisView;
  cost: number;
  history: { test: string; birads: string }[];
}

export interface ApiError {
  code: string;
  message: string;
  detail?: unknown;
}

export const BIRADS_TOKENS = ["1", "2", "3", "4A", "4B", "4C", "5", "6"] as const;
export type BiRadsToken = (typeof BIRADS_TOKENS)[number];
