/**
 * Tier chips and card validation.
 *
 * The chip always shows the color the payload carries. The CSS class is
 * derived from that color, so a payload violating the tier-color pairing
 * is caught by validateCard rather than silently restyled.
 */

import type { PatientCard, Tier, TierColor, TierName } from './types.js';

export const TIER_COLORS: Record<TierName, TierColor> = {
  low: 'green',
  medium: 'yellow',
  high: 'red',
};

export function tierChip(tier: Tier): HTMLSpanElement {
  const chip = document.createElement('span');
  chip.className = `tier-chip tier-${tier.color}`;
  chip.dataset.tier = tier.tier;
  chip.dataset.color = tier.color;
  chip.textContent = tier.tier;
  return chip;
}

function isTier(value: unknown): value is Tier {
  if (typeof value !== 'object' || value === null) return false;
  const t = value as Record<string, unknown>;
  return (
    typeof t.tier === 'string' &&
    t.tier in TIER_COLORS &&
    TIER_COLORS[t.tier as TierName] === t.color
  );
}

/**
 * Structural check of a card payload before rendering. Returns the list
 * of problems; an empty list means the card is safe to render.
 */
export function cardProblems(value: unknown): string[] {
  const problems: string[] = [];
  if (typeof value !== 'object' || value === null) {
    return ['card payload is not an object'];
  }
  const card = value as Record<string, unknown>;
  if (!Number.isInteger(card.encounter_id)) {
    problems.push('encounter_id missing or not an integer');
  }
  const score = card.risk_score;
  if (typeof score !== 'number' || !(score >= 0 && score <= 1)) {
    problems.push('risk_score missing or outside [0, 1]');
  }
  if (!isTier(card.tier)) {
    problems.push('tier missing or tier/color pairing is wrong');
  }
  if (!Array.isArray(card.factors) || card.factors.length > 5) {
    problems.push('factors missing or more than 5');
  } else {
    for (const f of card.factors as Record<string, unknown>[]) {
      if (
        typeof f !== 'object' || f === null ||
        typeof f.feature !== 'string' ||
        typeof f.contribution !== 'number' ||
        typeof f.phrase !== 'string'
      ) {
        problems.push('factor entries need feature, contribution, phrase');
        break;
      }
    }
  }
  if (!Array.isArray(card.care_plan) || card.care_plan.length === 0) {
    problems.push('care_plan missing or empty');
  }
  const meta = card.model_meta as Record<string, unknown> | undefined;
  if (typeof meta !== 'object' || meta === null ||
      typeof meta.model_fingerprint !== 'string' ||
      typeof meta.trained_at !== 'string') {
    problems.push('model_meta missing or incomplete');
  }
  return problems;
}

export function isValidCard(value: unknown): value is PatientCard {
  return cardProblems(value).length === 0;
}

/** Scores and deltas are rendered verbatim from service payloads. */
export function formatScore(score: number): string {
  return score.toFixed(3);
}

export function formatDelta(delta: number): string {
  if (delta === 0) return 'Δ 0.000';
  const sign = delta > 0 ? '+' : '−';
  return `Δ ${sign}${Math.abs(delta).toFixed(3)}`;
}
