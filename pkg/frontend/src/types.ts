/** Wire types mirroring the session-service API payloads. */

export interface DecisionPayload {
  share_agri: number;
  share_env: number;
  adj_meat: number;
  adj_pa: number;
}

export interface AgentMessagePayload {
  agent: string;
  phase: number;
  tick: number;
  text: string;
  decision: DecisionPayload | null;
  authored_by_human: boolean;
  carried_over: boolean;
}

export interface AgentGroup {
  agent: string;
  role_name: string;
  visible_to_human: boolean;
  messages: AgentMessagePayload[];
}

export interface GridCell {
  aft: number;
  protected: boolean;
  capitals: number[];
}

export interface GridPayload {
  width: number;
  height: number;
  cells: GridCell[];
}

export interface ProtocolPayload {
  phase: string;
  current_role: string;
  roles_played: string[];
  pending_role: string | null;
}

export interface UsageSlot {
  prompt_tokens: number;
  completion_tokens: number;
  calls: number;
}

export interface Snapshot {
  id: string;
  episode: number;
  episode_role: string | null;
  aft_names: Record<string, string>;
  grid: GridPayload;
  tick: number;
  phase: number;
  total_ticks: number;
  status: string;
  failure_reason: string | null;
  awaiting: string | null;
  protocol: ProtocolPayload;
  decision: DecisionPayload;
  decision_draft: string;
  messages: AgentGroup[];
  focus: string[];
  columns: string[];
  series_tail: Record<string, number>[];
  usage: Record<string, UsageSlot>;
  human_role: string | null;
  config: { phases: number; lag: number; seed: number; backend: string };
}

export interface SessionEvent {
  seq: number;
  kind: string;
  payload: Record<string, unknown>;
}

export interface TimelineEntry {
  tick: number;
  phase: number;
  agent: string;
  excerpt: string;
}

export interface ToolCallPayload {
  tool: string;
  arguments: Record<string, unknown>;
  result: string;
}
