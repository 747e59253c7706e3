// SPDX-License-Identifier: Apache-2.0

//! Per-update wall time of the incremental program against recomputing
//! membership from scratch.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

use dynlang::structure::new_empty_structure;
use dynlang::{Engine, EngineError};

use crate::family::{Family, Spec};
use crate::gen::{random_sequence, random_spec, rng_for, sequence_stream, SPEC_STREAM};

pub const CSV_HEADER: &str = "family,n,seq_len,mean_us_update,mean_us_oracle";

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub family: Family,
    pub n: usize,
    pub seq_len: usize,
    pub mean_us_update: f64,
    pub mean_us_oracle: f64,
}

/// Sequence length used for universe size `n`.
pub fn seq_len(n: usize) -> usize {
    2 * n
}

/// For each size, `reps` random sequences of length [`seq_len`] on a
/// spec drawn from `seed`; the same spec is used for every size.
pub fn bench(family: Family, sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>, EngineError> {
    let spec = random_spec(family, &mut rng_for(seed, 0, SPEC_STREAM));
    bench_spec(&spec, sizes, reps, seed)
}

pub fn bench_spec(spec: &Spec, sizes: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRow>, EngineError> {
    let (p, _) = spec.compile().expect("spec compiles");
    let engine = Engine::new(&p)?.with_env_timeout();
    let mut rows = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let n = n.max(spec.min_n());
        let len = seq_len(n);
        let (mut upd, mut orc) = (Duration::ZERO, Duration::ZERO);
        for r in 0..reps {
            let mut rng = rng_for(seed, k + 1, sequence_stream(r));
            let seq = random_sequence(&mut rng, &p.input, n, len);
            let mut st = engine.initial_state(n)?;
            let mut s = new_empty_structure(&p.input, n).expect("nonempty universe");
            for u in &seq {
                let t = Instant::now();
                engine.apply(&mut st, u)?;
                upd += t.elapsed();
                s.apply(u).expect("applicable");
                let t = Instant::now();
                std::hint::black_box(spec.oracle(&s));
                orc += t.elapsed();
            }
        }
        let steps = (reps * len).max(1) as f64;
        rows.push(BenchRow {
            family: spec.family(),
            n,
            seq_len: len,
            mean_us_update: upd.as_secs_f64() * 1e6 / steps,
            mean_us_oracle: orc.as_secs_f64() * 1e6 / steps,
        });
    }
    Ok(rows)
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{:.2},{:.2}",
            r.family, r.n, r.seq_len, r.mean_us_update, r.mean_us_oracle
        )
        .unwrap();
    }
    s
}
