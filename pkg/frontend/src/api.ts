/**
 * Service clients.
 *
 * HttpClient talks to the primary service's endpoints; FixtureClient
 * answers from recorded payloads so the whole UI works offline. Both
 * satisfy ServiceClient, and views only ever see the interface.
 */

import {
  ALL_FIXTURE_CARDS,
  fixtureListing,
  fixtureWhatIf,
} from './fixtures.js';
import type {
  PatientCard,
  PatientListing,
  WhatIfResponse,
} from './types.js';

export type SortKey = 'score' | 'id';

/** Error carrying the HTTP status so views can branch on 404 vs 422. */
export class ServiceError extends Error {
  status: number;
  detail: string;

  constructor(status: number, detail: string) {
    super(`service returned ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

export interface ServiceClient {
  listPatients(page: number, pageSize: number, sort: SortKey): Promise<PatientListing>;
  getCard(encounterId: number): Promise<unknown>;
  whatIf(
    encounterId: number,
    overrides: Record<string, number>,
    signal?: AbortSignal,
  ): Promise<WhatIfResponse>;
}

async function parseDetail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    if (typeof body.detail === 'string') return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return response.statusText;
  }
}

export class HttpClient implements ServiceClient {
  constructor(private baseUrl: string = '') {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ServiceError(response.status, await parseDetail(response));
    }
    return response.json();
  }

  listPatients(page: number, pageSize: number, sort: SortKey): Promise<PatientListing> {
    const query = `page=${page}&page_size=${pageSize}&sort=${sort}`;
    return this.request(`/patients?${query}`) as Promise<PatientListing>;
  }

  getCard(encounterId: number): Promise<unknown> {
    return this.request(`/patients/${encounterId}/card`);
  }

  whatIf(
    encounterId: number,
    overrides: Record<string, number>,
    signal?: AbortSignal,
  ): Promise<WhatIfResponse> {
    return this.request('/whatif', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ encounter_id: encounterId, overrides }),
      signal,
    }) as Promise<WhatIfResponse>;
  }
}

export class FixtureClient implements ServiceClient {
  async listPatients(page: number, pageSize: number, sort: SortKey): Promise<PatientListing> {
    const listing = fixtureListing();
    const items = [...listing.items];
    if (sort === 'id') {
      items.sort((a, b) => a.encounter_id - b.encounter_id);
    } else {
      items.sort(
        (a, b) => b.risk_score - a.risk_score || a.encounter_id - b.encounter_id,
      );
    }
    const start = (page - 1) * pageSize;
    return {
      page,
      page_size: pageSize,
      total: items.length,
      items: items.slice(start, start + pageSize),
    };
  }

  async getCard(encounterId: number): Promise<unknown> {
    const card = ALL_FIXTURE_CARDS.find((c) => c.encounter_id === encounterId);
    if (!card) throw new ServiceError(404, `no card for encounter ${encounterId}`);
    return card;
  }

  async whatIf(
    encounterId: number,
    overrides: Record<string, number>,
    signal?: AbortSignal,
  ): Promise<WhatIfResponse> {
    if (signal?.aborted) {
      throw new DOMException('request aborted', 'AbortError');
    }
    const recorded = fixtureWhatIf(encounterId);
    if (!recorded) {
      throw new ServiceError(404, `no card for encounter ${encounterId}`);
    }
    // the fixtures only record the zero-change response; anything else
    // needs the real service, which is the component that can rescore
    if (Object.keys(overrides).length > 0) {
      throw new ServiceError(
        422,
        'fixture mode only replays recorded zero-change responses',
      );
    }
    return recorded;
  }
}
