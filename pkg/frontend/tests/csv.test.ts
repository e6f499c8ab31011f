import { describe, expect, it } from 'vitest';

import { buildCurves, EXPECTED_HEADER, parseCsv, SchemaError } from '../src/csv.js';

function makeCsv(rows: string[]): string {
  return [EXPECTED_HEADER, ...rows].join('\n') + '\n';
}

describe('parseCsv', () => {
  it('rejects a wrong header naming the offender', () => {
    expect(() => parseCsv('seed,variant,value\n1,lspi,2\n')).toThrowError(
      /header mismatch: got "seed,variant,value"/,
    );
  });

  it('rejects a header-only file with "no rows"', () => {
    expect(() => parseCsv(EXPECTED_HEADER + '\n')).toThrowError(/no rows/);
  });

  it('rejects the empty file', () => {
    expect(() => parseCsv('')).toThrowError(SchemaError);
  });

  it('rejects non-numeric fields', () => {
    expect(() =>
      parseCsv(makeCsv(['0,lspi,dav,50,one,0,3,100,2.5'])),
    ).toThrowError(/non-numeric/);
  });

  it('parses well-formed rows', () => {
    const rows = parseCsv(makeCsv(['0,lspi,dav,50,1,0,3,100,2.5']));
    expect(rows).toHaveLength(1);
    expect(rows[0]).toMatchObject({
      seed: 0,
      variant: 'lspi',
      check: 'dav',
      n: 50,
      iteration: 1,
      policyValue: 2.5,
    });
  });
});

describe('buildCurves', () => {
  it('averages across seeds with a std band', () => {
    const rows = parseCsv(
      makeCsv([
        '0,lspi,dav,50,1,0,3,100,1.0',
        '0,lspi,dav,50,2,0,3,200,2.0',
        '1,lspi,dav,50,1,0,3,100,3.0',
        '1,lspi,dav,50,2,0,3,200,4.0',
      ]),
    );
    const curves = buildCurves(rows);
    expect(curves).toHaveLength(1);
    expect(curves[0].iterations).toEqual([1, 2]);
    expect(curves[0].mean).toEqual([2.0, 3.0]);
    expect(curves[0].band).toEqual([1.0, 1.0]);
    expect(curves[0].seeds).toBe(2);
  });

  it('keeps groups sorted and separate', () => {
    const rows = parseCsv(
      makeCsv([
        '0,politex,egss,10,1,0,3,10,1.0',
        '0,lspi,naive,50,1,0,3,10,1.0',
        '0,lspi,dav,10,1,0,3,10,1.0',
      ]),
    );
    const curves = buildCurves(rows);
    expect(curves.map((c) => `${c.variant}:${c.check}:${c.n}`)).toEqual([
      'lspi:dav:10',
      'lspi:naive:50',
      'politex:egss:10',
    ]);
  });
});
