/**
 * Recorded service payloads for fixture mode.
 *
 * Three cards (one per tier) captured from a real card export, plus the
 * matching listing page and zero-change what-if responses. Fixture mode
 * lets every view render, and every UI test run, with the service absent.
 */

import type {
  PatientCard,
  PatientListing,
  WhatIfResponse,
} from './types.js';

export const FIXTURE_CARDS: Record<'low' | 'medium' | 'high', PatientCard> = {
  low: {
    encounter_id: 104966,
    risk_score: 0.3010007063871318,
    tier: { tier: 'low', color: 'green' },
    factors: [
      {
        feature: 'number_inpatient',
        contribution: -0.42320221395389845,
        phrase: 'Hospital stays in the past year (lowers risk)',
      },
      {
        feature: 'time_in_hospital',
        contribution: -0.18421380724259268,
        phrase: 'Length of this hospital stay (lowers risk)',
      },
      {
        feature: 'inpatient_ge_2',
        contribution: -0.12483733102167081,
        phrase: 'Two or more hospital stays in the past year (lowers risk)',
      },
      {
        feature: 'discharge_disposition_id',
        contribution: -0.10193169852277986,
        phrase: 'Discharge destination code (lowers risk)',
      },
      {
        feature: 'number_emergency',
        contribution: -0.08982090512091509,
        phrase: 'Emergency department visits in the past year (lowers risk)',
      },
    ],
    care_plan: ['Provide standard discharge instructions.'],
    model_meta: {
      schema_version: '1',
      model_fingerprint:
        'a7582c7fbbd8885b837fba682d68aaa500a3a520e621db4602783cbcd2456939',
      trained_at: '2026-08-17T00:00:00Z',
      test_auroc: 0.7081,
      test_auprc: 0.2213,
      thresholds: {
        high_cut: 0.625637476114321,
        medium_cut: 0.4567506857425039,
        provenance: 'quantile-based',
      },
    },
  },
  medium: {
    encounter_id: 101372,
    risk_score: 0.5462688835817262,
    tier: { tier: 'medium', color: 'yellow' },
    factors: [
      {
        feature: 'time_in_hospital',
        contribution: 0.7567235392521588,
        phrase: 'Length of this hospital stay (raises risk)',
      },
      {
        feature: 'number_inpatient',
        contribution: -0.3660130941738036,
        phrase: 'Hospital stays in the past year (lowers risk)',
      },
      {
        feature: 'num_medications',
        contribution: -0.2022046964325271,
        phrase: 'Medications during this stay (lowers risk)',
      },
      {
        feature: 'age_mid',
        contribution: 0.13649269172690054,
        phrase: 'Patient age (raises risk)',
      },
      {
        feature: 'inpatient_ge_2',
        contribution: -0.12483733102167081,
        phrase: 'Two or more hospital stays in the past year (lowers risk)',
      },
    ],
    care_plan: [
      'Schedule a follow-up call within 7 days of discharge.',
      'Confirm a primary-care appointment within 14 days.',
    ],
    model_meta: {
      schema_version: '1',
      model_fingerprint:
        'a7582c7fbbd8885b837fba682d68aaa500a3a520e621db4602783cbcd2456939',
      trained_at: '2026-08-17T00:00:00Z',
      test_auroc: 0.7081,
      test_auprc: 0.2213,
      thresholds: {
        high_cut: 0.625637476114321,
        medium_cut: 0.4567506857425039,
        provenance: 'quantile-based',
      },
    },
  },
  high: {
    encounter_id: 107430,
    risk_score: 0.7061496533850996,
    tier: { tier: 'high', color: 'red' },
    factors: [
      {
        feature: 'time_in_hospital',
        contribution: 0.6755627432894558,
        phrase: 'Length of this hospital stay (raises risk)',
      },
      {
        feature: 'number_emergency',
        contribution: 0.49822826006047005,
        phrase: 'Emergency department visits in the past year (raises risk)',
      },
      {
        feature: 'number_inpatient',
        contribution: -0.3475654849385287,
        phrase: 'Hospital stays in the past year (lowers risk)',
      },
      {
        feature: 'number_outpatient',
        contribution: 0.1334225199108003,
        phrase: 'Outpatient visits in the past year (raises risk)',
      },
      {
        feature: 'inpatient_ge_2',
        contribution: -0.12483733102167081,
        phrase: 'Two or more hospital stays in the past year (lowers risk)',
      },
    ],
    care_plan: [
      'Schedule a follow-up call within 48 hours of discharge.',
      'Arrange a clinic visit within 7 days.',
      'Complete medication reconciliation before discharge.',
      'Discuss emergency-visit triggers and urgent-care alternatives.',
    ],
    model_meta: {
      schema_version: '1',
      model_fingerprint:
        'a7582c7fbbd8885b837fba682d68aaa500a3a520e621db4602783cbcd2456939',
      trained_at: '2026-08-17T00:00:00Z',
      test_auroc: 0.7081,
      test_auprc: 0.2213,
      thresholds: {
        high_cut: 0.625637476114321,
        medium_cut: 0.4567506857425039,
        provenance: 'quantile-based',
      },
    },
  },
};

export const ALL_FIXTURE_CARDS: PatientCard[] = [
  FIXTURE_CARDS.high,
  FIXTURE_CARDS.medium,
  FIXTURE_CARDS.low,
];

export function fixtureListing(): PatientListing {
  const items = ALL_FIXTURE_CARDS.map((card) => ({
    encounter_id: card.encounter_id,
    risk_score: card.risk_score,
    tier: card.tier.tier,
    color: card.tier.color,
  }));
  return { page: 1, page_size: 20, total: items.length, items };
}

/** Recorded zero-change what-if response for a fixture card. */
export function fixtureWhatIf(encounterId: number): WhatIfResponse | null {
  const card = ALL_FIXTURE_CARDS.find((c) => c.encounter_id === encounterId);
  if (!card) return null;
  return {
    encounter_id: card.encounter_id,
    new_score: card.risk_score,
    new_tier: { ...card.tier },
    new_factors: card.factors.map((f) => ({ ...f })),
    direct_overrides: [],
  };
}
