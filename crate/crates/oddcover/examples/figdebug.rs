//! Scratch driver for inspecting figure expansions during development.

use std::time::Instant;

use num_bigint::BigInt;
use oddcover::congruence::density_sum;
use oddcover::constructions::{build_figure_with, FigureId};
use oddcover::intmath::nat;

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "four15s".into());
    let id = FigureId::from_id_str(&which).expect("unknown figure id");
    let t0 = Instant::now();
    let b = match build_figure_with(id, None, None, true) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("build failed after {:?}: {e}", t0.elapsed());
            std::process::exit(1);
        }
    };
    println!("expanded in {:?}", t0.elapsed());
    println!("q = {}", b.q);
    println!("congruences: {}", b.system.congruences.len());
    println!("density sum = {}", density_sum(&b.system));
    println!("k count = {} (t declared {:?})", b.audit.k_count, b.system.declared_t);
    println!("slack: {}", b.slack.len());
    println!("leftovers: {}", b.leftovers.len());
    for lo in &b.leftovers {
        println!("  p = {}: z = {} mod {}^{}", lo.p, &lo.cls.representative % &lo.p.pow(3), lo.p, 3);
    }
    // Sampled coverage: consecutive and random-ish integers.
    let t1 = Instant::now();
    let mut misses = 0u64;
    // Histogram of miss signatures: per arrow prime, the depth of agreement
    // with the chain and the first differing base-p digit.
    let mut hist: std::collections::BTreeMap<String, u64> = std::collections::BTreeMap::new();
    let q_u: u64 = u64::try_from(b.q.clone()).unwrap();
    for x in 0..200_000u64 {
        if !b.system.covers_int(&BigInt::from(x)) {
            misses += 1;
            let mut sig = String::new();
            for lo in &b.leftovers {
                let p = u64::try_from(lo.p.clone()).unwrap();
                let z = &lo.cls.representative;
                let mut depth = 0u32;
                let mut pi = p;
                while nat(x % pi) == z % nat(pi) && depth < 20 {
                    depth += 1;
                    pi *= p;
                }
                if depth >= 2 {
                    let digit = ((x % pi) / (pi / p) + p - u64::try_from(z % nat(pi)).unwrap() / (pi / p)) % p;
                    sig = format!("p={p} depth={depth} digit={digit} xmodq={}", x % q_u);
                    break;
                }
            }
            if sig.is_empty() {
                sig = format!("other x%9={} x%5={} x%7={} x%q={}", x % 9, x % 5, x % 7, x % q_u);
            }
            *hist.entry(sig).or_insert(0) += 1;
        }
    }
    println!("misses in [0, 200000): {misses} ({:?})", t1.elapsed());
    for (sig, n) in &hist {
        println!("  {n:6}  {sig}");
    }
    let mut big_misses = 0u64;
    let mut x = nat(1);
    for i in 0..20_000u64 {
        x = (&x * nat(6364136223846793005) + nat(1442695040888963407)) % nat(1u64 << 62);
        let y = BigInt::from(x.clone()) + BigInt::from(i);
        if !b.system.covers_int(&y) {
            if big_misses < 10 {
                println!("uncovered big sample: {y}");
            }
            big_misses += 1;
        }
    }
    println!("misses among 20000 pseudorandom 62-bit: {big_misses}");
}
