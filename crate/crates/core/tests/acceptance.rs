//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and fails if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use phoenix_core::automata::{Dfa, MealyMachine, RunMode};
use phoenix_core::harness::experiment::{learn_dfa, learn_mm, synthesize_signature, SynthConfig};
use phoenix_core::harness::memory::{dfa_bits, pltl_bits, pltl_monitor_bits};
use phoenix_core::harness::{
    bench_throughput, evaluate, mem_report, run_monitors, Engine, Hit, SignatureDb,
};
use phoenix_core::pltl::{eval_at, Formula, Monitor, Operator, TraceLabel};
use phoenix_core::rpni::{
    prep_dfa_sample, prep_mm_sample, rpni, rpni_mealy, AttackSample, NegativeLabeling,
};
use phoenix_core::synth::{synthesize_min, SynthesisProblem};
use phoenix_core::traces::{
    gen_benign, gen_malicious, CorpusAlphabet, GenConfig, Layer, TraceSkeleton, VariantCatalog,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const SESSIONS: usize = 5;

fn benign(layer: Layer, n: usize, seed: u64) -> Vec<TraceSkeleton> {
    let cat = VariantCatalog::builtin();
    gen_benign(cat.benign_pool(layer), &GenConfig::new(SESSIONS, n, seed)).unwrap()
}

fn malicious(attack: &str, n: usize, seed: u64) -> Vec<TraceSkeleton> {
    let cat = VariantCatalog::builtin();
    let layer = cat.attack(attack).unwrap().layer;
    gen_malicious(cat.benign_pool(layer), &cat, attack, &GenConfig::new(SESSIONS, n, seed)).unwrap()
}

fn attacks_of(layer: Layer) -> Vec<String> {
    VariantCatalog::builtin()
        .attacks()
        .filter(|a| a.layer == layer)
        .map(|a| a.name.clone())
        .collect()
}

fn db_block(name: &str, layer: Layer, kind: &str, body: &str) -> String {
    format!("[signature]\nname={name}\nlayer={layer}\nkind={kind}\nseverity=high\nbody={body}\n\n")
}

fn compile(text: &str, files: &BTreeMap<String, String>) -> SignatureDb {
    let corpus = VariantCatalog::builtin().corpus_alphabet();
    SignatureDb::compile(text, files, Some(&corpus)).unwrap()
}

fn monitor_semantics() -> Outcome {
    let ops = Operator::ALL;
    let formulas = common::formulas_up_to(4, 2, &ops);
    let traces: Vec<_> = (1..=6).flat_map(|n| common::traces_of_len(n, 2)).collect();
    let mut checks = 0u64;
    fn check(f: &Formula, t: &phoenix_core::pltl::Trace, checks: &mut u64) -> Result<(), String> {
        let mut m = Monitor::new(f, t.width());
        let desugared = f.desugar_temporal();
        for (i, s) in t.states().iter().enumerate() {
            let fast = m.step(s).unwrap();
            let slow = eval_at(f, t, i).unwrap();
            let via_since = eval_at(&desugared, t, i).unwrap();
            *checks += 1;
            if fast != slow || slow != via_since {
                return Err(format!("{f:?} at {i} of {:?}", t.states()));
            }
        }
        Ok(())
    }
    for f in &formulas {
        for t in &traces {
            check(f, t, &mut checks)?;
        }
    }
    let exhaustive = checks;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let size = rng.gen_range(1..=12);
        let props = rng.gen_range(1..=3);
        let f = common::random_formula(&mut rng, size, props);
        let len = rng.gen_range(1..=20);
        let t = common::random_trace(&mut rng, len, props);
        check(&f, &t, &mut checks)?;
    }
    Ok(format!(
        "{} formulas x {} traces ({exhaustive} positions) + 10000 random cases ({} positions), 0 mismatches",
        formulas.len(),
        traces.len(),
        checks - exhaustive
    ))
}

fn dfa_consistent(d: &Dfa, words: impl Iterator<Item = Vec<String>>, accept: bool) -> Result<usize, String> {
    let mut n = 0;
    for w in words {
        let ids: Option<Vec<usize>> = w.iter().map(|s| d.symbol_id(s)).collect();
        let accepted = ids.is_some_and(|ids| d.accepts(&ids));
        ensure(accepted == accept, || format!("word {w:?} should be {}", if accept { "accepted" } else { "rejected" }))?;
        n += 1;
    }
    Ok(n)
}

fn mealy_consistent(m: &MealyMachine, pairs: impl Iterator<Item = (Vec<String>, Vec<String>)>) -> Result<usize, String> {
    let mut n = 0;
    for (input, output) in pairs {
        let ids: Vec<usize> = input
            .iter()
            .map(|s| m.input_id(s).ok_or_else(|| format!("unknown input {s}")))
            .collect::<Result<_, _>>()?;
        let got: Vec<&str> = m.transduce(&ids).into_iter().map(|o| m.outputs()[o].as_str()).collect();
        ensure(got == output, || format!("{input:?} gives {got:?}, trained {output:?}"))?;
        n += 1;
    }
    Ok(n)
}

fn rpni_consistency() -> Outcome {
    let ladder = [50, 100, 250, 500, 1250, 2500];
    let mut dfa_words = 0;
    let mut mm_words = 0;
    for (k, &n) in ladder.iter().enumerate() {
        let half = n / 2;
        for layer in [Layer::Nas, Layer::Rrc] {
            let b = benign(layer, half, 100 + k as u64);
            let attacks = attacks_of(layer);
            let mut per_attack = Vec::new();
            for (j, a) in attacks.iter().enumerate() {
                let m = malicious(a, half, 200 + (k * 31 + j) as u64);
                let pos: Vec<_> = b.iter().map(TraceSkeleton::symbols).collect();
                let neg: Vec<_> = m.iter().map(TraceSkeleton::symbols_through_first_attack).collect();
                let sample = prep_dfa_sample(&pos, &neg).map_err(|e| e.to_string())?;
                let d = rpni(&sample).map_err(|e| e.to_string())?;
                let render = |w: &Vec<u32>| -> Vec<String> {
                    w.iter().map(|&i| sample.alphabet()[i as usize].clone()).collect()
                };
                dfa_words += dfa_consistent(&d, sample.positives().iter().map(render), true)
                    .map_err(|e| format!("{a} n={n}: {e}"))?;
                dfa_words += dfa_consistent(&d, sample.negatives().iter().map(render), false)
                    .map_err(|e| format!("{a} n={n}: {e}"))?;
                // split the attack half across the layer's attacks for the
                // combined machine
                let share = (half / attacks.len()).max(1);
                per_attack.push(AttackSample {
                    name: a.clone(),
                    positives: if j == 0 { pos.clone() } else { Vec::new() },
                    negatives: neg.into_iter().take(share).collect(),
                });
            }
            let sample = prep_mm_sample(&per_attack, NegativeLabeling::FinalStep).map_err(|e| e.to_string())?;
            let m = rpni_mealy(&sample).map_err(|e| e.to_string())?;
            let pairs = sample.pairs().iter().map(|(i, o)| {
                (
                    i.iter().map(|&x| sample.inputs()[x as usize].clone()).collect(),
                    o.iter().map(|&x| sample.outputs()[x as usize].clone()).collect(),
                )
            });
            mm_words += mealy_consistent(&m, pairs).map_err(|e| format!("mealy {layer} n={n}: {e}"))?;
        }
    }
    Ok(format!(
        "sizes {ladder:?}: {dfa_words} DFA sample words and {mm_words} Mealy training pairs reproduced"
    ))
}

fn consistent(p: &SynthesisProblem, f: &Formula) -> bool {
    p.accepts(f)
}

fn pltl_minimality() -> Outcome {
    let alphabet = phoenix_core::pltl::Alphabet::new(["a", "b"]).unwrap();
    let by_size: Vec<Vec<Formula>> = (1..=3).map(|s| common::formulas_of_size(s, 2, &Operator::ALL)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut wanted = [17usize, 17, 16];
    let mut samples = Vec::new();
    let mut tries = 0;
    while wanted.iter().any(|&w| w > 0) {
        tries += 1;
        ensure(tries < 200_000, || "could not craft enough samples".into())?;
        let gen = |rng: &mut ChaCha8Rng| {
            (0..rng.gen_range(1..=3))
                .map(|_| {
                    let len = rng.gen_range(1..=4);
                    common::random_trace(rng, len, 2)
                })
                .collect::<Vec<_>>()
        };
        let pos = gen(&mut rng);
        let neg = gen(&mut rng);
        let p = SynthesisProblem::new(alphabet.clone(), pos, neg).with_max_size(3);
        if p.validate().is_err() {
            continue;
        }
        let min = by_size.iter().position(|fs| fs.iter().any(|f| consistent(&p, f)));
        if let Some(k) = min {
            if wanted[k] > 0 {
                wanted[k] -= 1;
                samples.push((p, k + 1));
            }
        }
    }
    let start = Instant::now();
    for (i, (p, size)) in samples.iter().enumerate() {
        let f = synthesize_min(p).map_err(|e| format!("sample {i}: {e}"))?;
        ensure(f.size() == *size, || format!("sample {i}: got size {} want {size}", f.size()))?;
        ensure(consistent(p, &f), || format!("sample {i}: result inconsistent"))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!("50 samples (17/17/16 of minimal size 1/2/3) matched in {took:.2?}"))
}

struct RlfSetup {
    pltl: String,
    test: Vec<TraceSkeleton>,
    dfa: Dfa,
    mm: MealyMachine,
}

fn rlf_setup() -> RlfSetup {
    let cat = VariantCatalog::builtin();
    let train_b = benign(Layer::Rrc, 25, 11);
    let train_a = malicious("rlf_report", 8, 12);
    let cfg = SynthConfig {
        seed: 7,
        ..SynthConfig::default()
    };
    let cands = synthesize_signature(&train_b, &train_a, Some(&cat.corpus_alphabet()), &cfg, None).unwrap();
    let dfa = learn_dfa(&train_b, &train_a).unwrap();
    let mut all_a = train_a.clone();
    for (j, a) in attacks_of(Layer::Rrc).iter().enumerate() {
        if a != "rlf_report" {
            all_a.extend(malicious(a, 8, 40 + j as u64));
        }
    }
    let mm = learn_mm(&train_b, &all_a).unwrap();
    let mut test = benign(Layer::Rrc, 1000, 21);
    test.extend(malicious("rlf_report", 1000, 22));
    RlfSetup {
        pltl: cands[0].formula.clone(),
        test,
        dfa,
        mm,
    }
}

fn rlf_end_to_end(s: &RlfSetup) -> Outcome {
    let mut files = BTreeMap::new();
    files.insert("rlf.dfa".to_string(), s.dfa.to_text());
    files.insert("rrc.mm".to_string(), s.mm.to_text());
    let text = db_block("rlf_report", Layer::Rrc, "pltl", &s.pltl)
        + &db_block("rlf_report_dfa", Layer::Rrc, "dfa", "rlf.dfa")
        + &db_block("rrc_mm", Layer::Rrc, "mm", "rrc.mm");
    // the DFA row targets rlf_report too
    let mut test = s.test.clone();
    let mut engine = Engine::new(compile(&text, &files));
    let report = evaluate(&mut engine, &test).map_err(|e| e.to_string())?;
    let pltl = report.row("rlf_report", "rlf_report").unwrap().clone();
    let mm = report.row("rrc_mm", "rlf_report").unwrap().clone();
    for t in &mut test {
        if t.is_attack() {
            t.label = Some(TraceLabel::Attack("rlf_report_dfa".into()));
        }
    }
    let dfa = evaluate(&mut engine, &test).map_err(|e| e.to_string())?;
    let dfa = dfa.row("rlf_report_dfa", "rlf_report_dfa").unwrap().clone();
    let line = format!(
        "PLTL {} p/r/F1 {:.3}/{:.3}/{:.3}; MM {:.3}/{:.3}/{:.3}; DFA {:.3}/{:.3}/{:.3}",
        s.pltl, pltl.precision, pltl.recall, pltl.f1, mm.precision, mm.recall, mm.f1, dfa.precision, dfa.recall, dfa.f1
    );
    ensure(pltl.precision == 1.0 && pltl.recall == 1.0 && pltl.f1 == 1.0, || line.clone())?;
    ensure(pltl.f1 >= mm.f1 && mm.f1 >= dfa.f1, || format!("ordering violated: {line}"))?;
    Ok(line)
}

fn earliest_detection(s: &RlfSetup) -> Outcome {
    let cat = VariantCatalog::builtin();
    let reference = cat.attack("rlf_report").unwrap().reference.clone().unwrap();
    let text = db_block("synthesized", Layer::Rrc, "pltl", &s.pltl) + &db_block("reference", Layer::Rrc, "pltl", &reference);
    let mut engine = Engine::new(compile(&text, &BTreeMap::new()));
    // every variant alone, after each benign session, plus the generated set
    let mut traces: Vec<TraceSkeleton> = Vec::new();
    let variants = &cat.attack("rlf_report").unwrap().variants;
    for v in variants {
        let mut t = TraceSkeleton::new(vec![v.clone()]);
        t.attack_sessions = vec![0];
        traces.push(t);
        for b in cat.benign_pool(Layer::Rrc) {
            let mut t = TraceSkeleton::new(vec![b.clone(), v.clone(), b.clone()]);
            t.attack_sessions = vec![1];
            traces.push(t);
        }
    }
    traces.extend(s.test.iter().filter(|t| t.is_attack()).cloned());
    let report = run_monitors(&mut engine, &traces, RunMode::StopFirst).map_err(|e| e.to_string())?;
    for (i, t) in traces.iter().enumerate() {
        let events: Vec<&str> = t.events().map(|e| e.label.as_str()).collect();
        let span = t.session_spans()[t.attack_sessions[0]].clone();
        let want = span.clone().find(|&k| events[k] == "ueInformationRequest").unwrap();
        let first_report = span.clone().find(|&k| events[k] == "rlfReport").unwrap();
        for sig in ["synthesized", "reference"] {
            let v = report
                .verdicts
                .iter()
                .find(|v| v.trace == i && v.signature == sig)
                .ok_or_else(|| format!("{sig} missed trace {i}"))?;
            ensure(v.hit == Hit::PltlFalse && v.step == want && v.step < first_report, || {
                format!("{sig} on trace {i}: verdict at {} ({}), expected {want}", v.step, events[v.step])
            })?;
        }
    }
    Ok(format!(
        "{} traces ({} variants, {} generated): both signatures fire at the unprotected ueInformationRequest",
        traces.len(),
        variants.len(),
        s.test.iter().filter(|t| t.is_attack()).count()
    ))
}

fn throughput() -> Outcome {
    let cat = VariantCatalog::builtin();
    let alphabet = cat.corpus_alphabet();
    let mut text = String::new();
    let mut names = Vec::new();
    for a in cat.attacks() {
        text += &db_block(&a.name, a.layer, "pltl", a.reference.as_ref().unwrap());
        names.push(a.name.clone());
    }
    let mut stream = Vec::new();
    let mut train_b = Vec::new();
    let mut train_a = Vec::new();
    for (j, layer) in [Layer::Nas, Layer::Rrc].into_iter().enumerate() {
        stream.extend(benign(layer, 500, 300 + j as u64));
        train_b.extend(benign(layer, 100, 310 + j as u64));
    }
    for (j, a) in names.iter().enumerate() {
        stream.extend(malicious(a, 40, 400 + j as u64));
        train_a.extend(malicious(a, 30, 500 + j as u64));
    }
    let mm = learn_mm(&train_b, &train_a).map_err(|e| e.to_string())?;
    let mut files = BTreeMap::new();
    files.insert("all.mm".to_string(), mm.to_text());
    let mut pltl = Engine::new(SignatureDb::compile(&text, &files, Some(&alphabet)).unwrap());
    let mut combined = Engine::new(compile(&db_block("all", Layer::Nas, "mm", "all.mm"), &files));
    let p = bench_throughput(&mut pltl, &stream, 5, RunMode::ReportAll).map_err(|e| e.to_string())?;
    let m = bench_throughput(&mut combined, &stream, 5, RunMode::ReportAll).map_err(|e| e.to_string())?;
    let line = format!(
        "{} PLTL signatures {:.0} msg/s (sd {:.0}); combined Mealy {:.0} msg/s (sd {:.0}); ratio {:.1}x over {} messages",
        names.len(),
        p.mean,
        p.sd,
        m.mean,
        m.sd,
        m.mean / p.mean,
        p.messages
    );
    ensure(names.len() >= 10 && p.mean >= 10_000.0 && m.mean >= 5.0 * p.mean, || line.clone())?;
    Ok(line)
}

fn memory() -> Outcome {
    ensure(dfa_bits(2, 4, 4) == 21, || format!("dfa_bits(2,4,4) = {}", dfa_bits(2, 4, 4)))?;
    ensure(pltl_bits(2, 2, 4) == 12, || format!("pltl_bits(2,2,4) = {}", pltl_bits(2, 2, 4)))?;
    ensure(pltl_monitor_bits(4) == 8, || "monitor bits".into())?;
    // the same numbers through a database
    let mut files = BTreeMap::new();
    files.insert(
        "d.dfa".to_string(),
        "states: 2\nstart: 0\naccepting: 0 1\nalphabet: a b c d\ntrans: 0 a 0\ntrans: 0 b 1\ntrans: 1 c 1\ntrans: 1 d 0\n".to_string(),
    );
    let text = db_block("d", Layer::Nas, "dfa", "d.dfa") + &db_block("p", Layer::Nas, "pltl", "(S (not (prop a)) (prop b))");
    let corpus = CorpusAlphabet::new(vec!["a".into(), "b".into(), "c".into(), "d".into()], vec![]).unwrap();
    let db = SignatureDb::compile(&text, &files, Some(&corpus)).map_err(|e| e.to_string())?;
    let r = mem_report(&db);
    ensure(r.rows[0].structure_bits == 21 && r.rows[0].header_bytes == 12, || format!("{:?}", r.rows[0]))?;
    ensure(
        r.rows[1].structure_bits == 12 && r.rows[1].monitor_bits == 8 && r.rows[1].header_bytes == 8,
        || format!("{:?}", r.rows[1]),
    )?;
    // live state is two bits per distinct subformula
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..2000 {
        let size = rng.gen_range(1..=15);
        let f = common::random_formula(&mut rng, size, 3);
        let m = Monitor::new(&f, 3);
        let mut distinct = Vec::new();
        collect_distinct(&f, &mut distinct);
        ensure(m.state_bits() == 2 * distinct.len(), || format!("{f:?}"))?;
    }
    Ok("DFA 21 bits + 12 B, PLTL 12 + 8 bits + 8 B; 2000 monitors hold 2 bits per distinct subformula".into())
}

fn collect_distinct(f: &Formula, out: &mut Vec<Formula>) {
    for c in f.children() {
        collect_distinct(c, out);
    }
    if !out.contains(f) {
        out.push(f.clone());
    }
}

fn cross_oracle() -> Outcome {
    let mut agree = 0usize;
    let mut total = 0usize;
    let mut worst = (String::from("none"), 1.0f64);
    for (l, layer) in [Layer::Nas, Layer::Rrc].into_iter().enumerate() {
        let attacks = attacks_of(layer);
        let train_b = benign(layer, 250, 600 + l as u64);
        let test_b = benign(layer, 500, 610 + l as u64);
        let mut train_all = Vec::new();
        let mut dfas = Vec::new();
        for (j, a) in attacks.iter().enumerate() {
            let train = malicious(a, 50, 700 + (l * 50 + j) as u64);
            dfas.push(learn_dfa(&train_b, &train).map_err(|e| e.to_string())?);
            train_all.extend(train);
        }
        let mm = learn_mm(&train_b, &train_all).map_err(|e| e.to_string())?;
        let mut files = BTreeMap::new();
        files.insert("mm".to_string(), mm.to_text());
        let mut text = db_block("combined", layer, "mm", "mm");
        for (a, d) in attacks.iter().zip(&dfas) {
            files.insert(format!("{a}.dfa"), d.to_text());
            text += &db_block(a, layer, "dfa", &format!("{a}.dfa"));
        }
        let mut engine = Engine::new(compile(&text, &files));
        for (j, a) in attacks.iter().enumerate() {
            let mut test = test_b.clone();
            test.extend(malicious(a, 500, 800 + (l * 50 + j) as u64));
            let report = run_monitors(&mut engine, &test, RunMode::ReportAll).map_err(|e| e.to_string())?;
            let mut local = 0;
            for (i, _) in test.iter().enumerate() {
                let mut mm_hit = false;
                let mut dfa_hit = false;
                for v in report.verdicts.iter().filter(|v| v.trace == i) {
                    match &v.hit {
                        Hit::MmOutput(o) if o == &format!("vulnerability_{a}") => mm_hit = true,
                        Hit::DfaReject if &v.signature == a => dfa_hit = true,
                        _ => {}
                    }
                }
                if mm_hit == dfa_hit {
                    local += 1;
                }
            }
            let rate = local as f64 / test.len() as f64;
            if rate <= worst.1 {
                worst = (a.clone(), rate);
            }
            agree += local;
            total += test.len();
        }
    }
    let rate = agree as f64 / total as f64;
    let line = format!(
        "agreement {agree}/{total} = {:.2}% (lowest: {} at {:.2}%)",
        100.0 * rate,
        worst.0,
        100.0 * worst.1
    );
    ensure(rate >= 0.99, || line.clone())?;
    Ok(line)
}

/// Straight to the process stdout so the lines show up even when the test
/// harness captures output.
fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn run(id: usize, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            report(&format!("PASS {id} {name}: {detail} [{secs:.1}s]"));
            true
        }
        Err(why) => {
            report(&format!("FAIL {id} {name}: {why} [{secs:.1}s]"));
            false
        }
    }
}

#[test]
fn acceptance() {
    // libtest has already written `test acceptance ... ` without a newline
    report("\nacceptance criteria:");
    let mut ok = true;
    ok &= run(1, "monitor/semantics equivalence", monitor_semantics);
    ok &= run(2, "RPNI observational consistency", rpni_consistency);
    ok &= run(3, "PLTL minimality", pltl_minimality);
    let setup = catch_unwind(rlf_setup).ok();
    match &setup {
        Some(s) => {
            ok &= run(4, "RLF end-to-end", || rlf_end_to_end(s));
            ok &= run(5, "earliest detection", || earliest_detection(s));
        }
        None => {
            report("FAIL 4 RLF end-to-end: training failed");
            report("FAIL 5 earliest detection: training failed");
            ok = false;
        }
    }
    ok &= run(6, "throughput", throughput);
    ok &= run(7, "memory report", memory);
    ok &= run(8, "MM/DFA cross-oracle agreement", cross_oracle);
    assert!(ok, "some acceptance criteria failed");
}
