/** Wire types for the rewardloop session service. */

export interface TargetDict {
  kind: "state_action" | "segment" | "episode" | "feature_set" | "whole_behavior";
  episode_id?: string;
  start?: number;
  stop?: number;
  index?: number;
  feature_indices?: number[];
  cells?: [number, number][];
  hypothetical?: boolean;
}

export interface MeasurementDict {
  intrinsic: Record<string, unknown>;
  contextual: Record<string, unknown>;
  timestamp: number;
}

export interface SessionInfo {
  session_id: string;
  mode: "simulated" | "interactive";
  round: number;
  model_version: number;
  finished: boolean;
}

export interface PendingQuery {
  query_id: string;
  kind: string;
  targets: TargetDict[];
  frames: string[][][];
}

export interface EpisodeSummary {
  episode_id: string;
  length: number;
  seed: number;
  policy_id: string | null;
}

export interface EpisodeStep {
  index: number;
  cell: [number, number];
  action: string;
  next_cell: [number, number];
  true_reward: number;
  learned_reward: number;
  frame: string[];
}

export interface EpisodeDetail {
  episode_id: string;
  seed: number;
  steps: EpisodeStep[];
}

export interface MetricsSnapshot {
  round: number;
  finished: boolean;
  n_instances: number;
  n_episodes: number;
  loss_trace: number[];
  latest: Record<string, unknown> | null;
  uncertainty_histogram: { counts: number[]; edges: number[] };
}

export type ProfileDict = Record<string, string[]>;

export interface InstanceAudit {
  instance_id: string;
  source_id: string;
  profile: ProfileDict;
  value_kind: string;
  targets: TargetDict[];
  violations: string[];
  record: string;
}

export interface Paged<K extends string, T> {
  api_version: number;
  model_version: number;
  page: number;
  page_size: number;
  total: number;
}

export interface EpisodesPage extends Paged<"episodes", EpisodeSummary> {
  episodes: EpisodeSummary[];
}

export interface InstancesPage extends Paged<"instances", InstanceAudit> {
  instances: InstanceAudit[];
}
