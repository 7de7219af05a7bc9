/**
 * What-if exploration panel.
 *
 * Steppers adjust raw utilization counts, toggles flip binary features;
 * submit posts the touched fields to /whatif and renders the rescored
 * result (new score, delta against the stored card, new tier chip, new
 * factors) beside the original. Only the most recent submission counts:
 * a new submit aborts the in-flight request, and stale responses are
 * dropped. Service 422s surface as inline field errors, 404 as an
 * inline not-found message; nothing is rescored locally.
 */

import { ServiceError, type ServiceClient } from './api.js';
import { formatDelta, formatScore, tierChip } from './tiers.js';
import {
  BINARY_FEATURES,
  RAW_COUNT_FEATURES,
  type PatientCard,
  type WhatIfResponse,
} from './types.js';

export class WhatIfPanel {
  pendingOverrides: Record<string, number> = {};
  lastResponse: WhatIfResponse | null = null;

  private inflight: AbortController | null = null;
  private sequence = 0;
  private resultMount!: HTMLElement;
  private errorMount!: HTMLElement;

  constructor(
    private card: PatientCard,
    private client: ServiceClient,
    private mount: HTMLElement,
  ) {}

  render(): void {
    this.mount.textContent = '';
    const panel = document.createElement('section');
    panel.className = 'whatif-panel';

    const controls = document.createElement('div');
    controls.className = 'whatif-controls';
    for (const name of RAW_COUNT_FEATURES) {
      controls.appendChild(this.stepper(name));
    }
    for (const name of BINARY_FEATURES) {
      controls.appendChild(this.toggle(name));
    }
    panel.appendChild(controls);

    this.errorMount = document.createElement('div');
    this.errorMount.className = 'whatif-errors';
    panel.appendChild(this.errorMount);

    const submit = document.createElement('button');
    submit.className = 'whatif-submit';
    submit.textContent = 'Rescore';
    submit.addEventListener('click', () => void this.submit());
    panel.appendChild(submit);

    this.resultMount = document.createElement('div');
    this.resultMount.className = 'whatif-result';
    panel.appendChild(this.resultMount);

    this.mount.appendChild(panel);
  }

  /** Numeric stepper; the field joins the overrides once touched. */
  private stepper(name: string): HTMLElement {
    const row = document.createElement('div');
    row.className = 'stepper';
    row.dataset.feature = name;

    const label = document.createElement('label');
    label.textContent = name;
    const input = document.createElement('input');
    input.type = 'number';
    input.min = '0';
    input.step = '1';
    input.dataset.feature = name;
    input.addEventListener('change', () => {
      this.setOverride(name, input.value);
    });

    const minus = document.createElement('button');
    minus.className = 'step-down';
    minus.textContent = '-';
    const plus = document.createElement('button');
    plus.className = 'step-up';
    plus.textContent = '+';
    const bump = (direction: number) => {
      const current = input.value === '' ? 0 : Number(input.value);
      const next = Math.max(0, current + direction);
      input.value = String(next);
      this.setOverride(name, input.value);
    };
    minus.addEventListener('click', () => bump(-1));
    plus.addEventListener('click', () => bump(1));

    row.append(label, minus, input, plus);
    return row;
  }

  private toggle(name: string): HTMLElement {
    const row = document.createElement('div');
    row.className = 'toggle';
    row.dataset.feature = name;

    const label = document.createElement('label');
    label.textContent = name;
    const input = document.createElement('input');
    input.type = 'checkbox';
    input.dataset.feature = name;
    input.addEventListener('change', () => {
      this.pendingOverrides[name] = input.checked ? 1 : 0;
    });

    row.append(label, input);
    return row;
  }

  private setOverride(name: string, raw: string): void {
    if (raw === '') {
      delete this.pendingOverrides[name];
      return;
    }
    this.pendingOverrides[name] = Number(raw);
  }

  /** Post the touched fields; later submissions cancel earlier ones. */
  async submit(): Promise<void> {
    this.inflight?.abort();
    this.inflight = new AbortController();
    const ticket = ++this.sequence;
    this.errorMount.textContent = '';

    try {
      const response = await this.client.whatIf(
        this.card.encounter_id,
        { ...this.pendingOverrides },
        this.inflight.signal,
      );
      if (ticket !== this.sequence) return; // superseded while in flight
      this.lastResponse = response;
      this.renderResult(response);
    } catch (err) {
      if (ticket !== this.sequence) return;
      if (err instanceof DOMException && err.name === 'AbortError') return;
      this.renderError(err);
    }
  }

  private renderResult(response: WhatIfResponse): void {
    this.resultMount.textContent = '';

    const score = document.createElement('span');
    score.className = 'new-score';
    score.textContent = formatScore(response.new_score);

    const delta = document.createElement('span');
    delta.className = 'delta';
    delta.textContent = formatDelta(response.new_score - this.card.risk_score);

    const chip = tierChip(response.new_tier);

    const factors = document.createElement('ul');
    factors.className = 'new-factors';
    for (const factor of response.new_factors) {
      const item = document.createElement('li');
      item.textContent = factor.phrase;
      factors.appendChild(item);
    }

    this.resultMount.append(score, delta, chip, factors);

    if (response.direct_overrides.length > 0) {
      const note = document.createElement('p');
      note.className = 'direct-note';
      note.textContent =
        `applied directly (no recount): ${response.direct_overrides.join(', ')}`;
      this.resultMount.appendChild(note);
    }
  }

  private renderError(err: unknown): void {
    const message = document.createElement('p');
    if (err instanceof ServiceError && err.status === 422) {
      message.className = 'field-error';
      message.textContent = err.detail;
    } else if (err instanceof ServiceError && err.status === 404) {
      message.className = 'not-found';
      message.textContent = `Encounter ${this.card.encounter_id} has no stored card.`;
    } else {
      message.className = 'service-error';
      message.textContent = 'Rescore failed; the card service did not answer.';
    }
    this.errorMount.appendChild(message);
  }
}
