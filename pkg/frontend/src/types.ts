// Wire types for the /v1 HTTP API. Positions are [z, y, x] in mm.

export interface GraphNode {
  id: number;
  pos: [number, number, number];
  radius: number;
}

export interface GraphEdge {
  id: number;
  a: number;
  b: number;
  polyline: number[][];
  arc_length: number;
  min_radius: number;
  mean_radius: number;
}

export interface GraphResponse {
  nodes: GraphNode[];
  edges: GraphEdge[];
  components: number[][];
}

export interface SessionCreateResponse {
  session_id: string;
  node_count: number;
  edge_count: number;
  component_count: number;
  build_seconds: number;
}

export interface RootResponse {
  root: number;
  criterion: string;
  nodes_expanded: number;
  wall_time_s: number;
  cached: boolean;
  total_expanded: number;
}

export interface PathResponse {
  found: boolean;
  nodes: number[];
  edges: number[];
  total_cost: number | null;
  arc_length: number | null;
  directions: number[][];
  reason: string | null;
}

export interface EdgeFraction {
  id: number;
  fraction: number;
}

export interface SuppressionResponse {
  d: number;
  nodes: number[];
  edges: EdgeFraction[];
}

export interface Verdict {
  vessel: string;
  present: boolean;
  reason: string;
  distances: (number | null)[];
  final_marker_position: number[] | null;
  slope: number | null;
}

export interface LabelsResponse {
  verdicts: Verdict[];
  lvo_positive: boolean;
  implicated: string[];
}

export interface CacheStats {
  root: number;
  criterion: string;
  nodes_expanded: number;
  wall_time_s: number;
}

export interface StatsResponse {
  total_expanded: number;
  caches: CacheStats[];
  active_root: number | null;
  active_criterion: string | null;
}

export interface PhantomRequest {
  seed?: number;
  noise_sigma?: number;
  occlusions?: { label: string; fraction_start: number; fraction_end: number }[];
  lvo_scenario?: { vessel: string; fraction_start: number } | null;
}
