/**
 * Wire types for the readmission card service.
 *
 * These mirror the JSON schemas in docs/ one to one; the client renders
 * what the service sends and never derives a risk number on its own.
 */

export type TierName = 'low' | 'medium' | 'high';
export type TierColor = 'green' | 'yellow' | 'red';

export interface Tier {
  tier: TierName;
  color: TierColor;
}

export interface Factor {
  feature: string;
  contribution: number;
  phrase: string;
}

export interface TierThresholds {
  high_cut: number;
  medium_cut: number;
  provenance: 'quantile-based' | 'fixed';
}

export interface ModelMeta {
  schema_version: string;
  model_fingerprint: string;
  trained_at: string;
  test_auroc: number;
  test_auprc: number;
  thresholds: TierThresholds;
}

export interface PatientCard {
  encounter_id: number;
  risk_score: number;
  tier: Tier;
  factors: Factor[];
  care_plan: string[];
  model_meta: ModelMeta;
}

export interface PatientRow {
  encounter_id: number;
  risk_score: number;
  tier: TierName;
  color: TierColor;
}

export interface PatientListing {
  page: number;
  page_size: number;
  total: number;
  items: PatientRow[];
}

export interface WhatIfResponse {
  encounter_id: number;
  new_score: number;
  new_tier: Tier;
  new_factors: Factor[];
  direct_overrides: string[];
}

/** Raw utilization counts the service re-engineers; shown as steppers. */
export const RAW_COUNT_FEATURES = [
  'number_inpatient',
  'number_emergency',
  'number_outpatient',
  'time_in_hospital',
  'num_lab_procedures',
  'num_procedures',
  'num_medications',
] as const;

/** Binary engineered features; shown as on/off toggles. */
export const BINARY_FEATURES = [
  'a1c_high',
  'any_diabetes_med',
  'change_Ch',
  'discharge_home',
  'discharge_snf_rehab',
] as const;

/** A card plus the state the views hang off it. */
export interface CardViewModel {
  card: PatientCard;
  expanded: boolean;
  pendingOverrides: Record<string, number>;
}
