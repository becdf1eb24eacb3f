export interface RoomSummary {
  id: string;
  category: string;
  description: string[];
  image: string | null;
  detections: number;
}

export interface DetectionBox {
  class_label: string;
  x: number;
  y: number;
  width: number;
  height: number;
  confidence: number;
  source_row?: number;
}

export interface RoomDetail {
  id: string;
  category: string;
  description: string[];
  image: string | null;
  items: string[];
  detections: DetectionBox[];
  kept_detections: DetectionBox[];
}

export interface ResultCard {
  item_id: string;
  score: number;
  modality: "visual" | "text" | "blended";
  name: string;
  class_label: string;
  image: string | null;
}

export interface ResultGroup {
  detection: DetectionBox | null;
  fallback: boolean;
  results: ResultCard[];
}

export interface SearchResponse {
  groups: ResultGroup[];
  strategy: string;
  k: number;
  notices: string[];
  timing: { text_ms: number; total_ms: number };
}

export type Strategy = "simple" | "feature_similarity";

export interface SearchRequest {
  room_id?: string;
  text_query?: string;
  k: number;
  strategy: Strategy;
}

export interface ApiErrorDetail {
  code: string;
  message: string;
  oov_tokens?: string[];
}
