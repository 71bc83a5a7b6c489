//! Acceptance gate: one test per criterion. The test names are the pass/fail
//! lines; failing tests print the measured values and point at the analysis
//! notes. Two sub-criteria encode exact figures from the source diagrams that
//! the faithful construction provably cannot reproduce (the diagrams are
//! internally inconsistent); those tests assert the stated values anyway and
//! fail honestly rather than being weakened.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::time::Instant;

use common::*;
use netsup::compose::{compose, simulate_step};
use netsup::netplant::{build_networked_plant, NetworkConfig};
use netsup::pipeline::run_pipeline;
use netsup::synthesis::synthesize;
use netsup::verify::{oracle_max_permissive, verify_nonblocking, verify_tlf, Verdict};

#[test]
fn criterion_1_networked_plant_language_matches_transcription() {
    let start = Instant::now();
    let (g, ev) = load_plant("pedestrian.tdes");
    let cfg = pedestrian_cfg();
    let np = build_networked_plant(&g, &ev, &cfg).unwrap();
    let fig = load_into("pedestrian_np_fig.tdes", &ev);
    let witness = np.tdes.language_equal(&fig, &ev).unwrap();
    assert!(
        witness.is_none(),
        "language difference: {}",
        ev.render_word(&witness.unwrap())
    );
    assert_eq!(
        np.tdes.bounded_marked_language(10),
        fig.bounded_marked_language(10),
        "marked languages diverge within depth 10"
    );
    assert!(start.elapsed().as_secs() < 1, "criterion 1 must run in under a second");
    println!("criterion 1 (language equivalence to transcription): PASS");
}

#[test]
fn criterion_1_state_count_is_exactly_41_as_stated() {
    let (g, ev) = load_plant("pedestrian.tdes");
    let np = build_networked_plant(&g, &ev, &pedestrian_cfg()).unwrap();
    println!(
        "criterion 1 (exact state count): FAIL — construction yields {} states; \
         the 41-state diagram double-draws two composites and drops a four-state \
         subtree, so no faithful construction can produce 41 (language equivalence \
         holds, see criterion_1_networked_plant_language_matches_transcription)",
        np.tdes.state_count()
    );
    assert_eq!(np.tdes.state_count(), 41);
}

#[test]
fn criterion_2_supervisor_reproduction_as_stated() {
    let (g, ev) = load_plant("pedestrian.tdes");
    let cfg = pedestrian_cfg();
    let np = build_networked_plant(&g, &ev, &cfg).unwrap();
    let outcome = synthesize(&np, &ev, &cfg);
    println!(
        "criterion 2 (ten-state supervisor): FAIL — synthesis returns NoResult, and \
         exhaustive candidate enumeration confirms no proper supervisor exists for \
         this instance (see criterion_2_refusal_is_certified_by_exhaustive_search); \
         the drawn ten-state supervisor is itself improper \
         (see criterion_2_hand_written_supervisor_is_improper)"
    );
    let ns = outcome
        .supervisor()
        .expect("stated criterion: a supervisor must exist");
    assert_eq!(ns.state_count(), 10);
}

#[test]
fn criterion_2_refusal_is_certified_by_exhaustive_search() {
    let (g, ev) = load_plant("pedestrian.tdes");
    let cfg = pedestrian_cfg();
    let np = build_networked_plant(&g, &ev, &cfg).unwrap();
    let outcome = synthesize(&np, &ev, &cfg);
    assert!(outcome.supervisor().is_none());
    let report = oracle_max_permissive(&np, &g, &ev, &cfg, None, 12, 10);
    assert_eq!(report.verdict, Verdict::Pass, "{}", report.detail);
    assert_eq!(
        report.proper_candidates, 0,
        "a proper candidate would contradict the refusal"
    );
    println!(
        "criterion 2 companion: PASS — refusal certified over {} candidates",
        report.enumerated
    );
}

#[test]
fn criterion_2_hand_written_supervisor_is_improper() {
    let (g, ev) = load_plant("pedestrian.tdes");
    let cfg = pedestrian_cfg();
    let ns_fig = load_into("pedestrian_ns_fig.tdes", &ev);
    let nsp = compose(&ns_fig, &g, &ev, &cfg).unwrap();

    let nb = verify_nonblocking(&nsp, &ev);
    assert_eq!(nb.verdict, Verdict::Fail, "the drawn supervisor admits blocking");
    let tl = verify_tlf(&nsp, &ev);
    assert_eq!(tl.verdict, Verdict::Fail, "the drawn supervisor admits time-locks");

    // The counterexample replays step by step to a genuinely blocking state.
    let word: Vec<_> = nb
        .counterexample
        .iter()
        .map(|n| ev.lookup(n).expect("counterexample uses known events"))
        .collect();
    let mut s = nsp.tdes.initial;
    for &e in &word {
        s = simulate_step(&nsp, s, e, &ev).expect("counterexample replays").0;
    }
    assert!(nsp.tdes.blocking_states().contains(&s));
    println!("criterion 2 companion: PASS — drawn supervisor refuted with replayable trace");
}

#[test]
fn criterion_3a_non_forcible_enabling_yields_no_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NetworkConfig {
        enabling_forcible: false,
        ..pedestrian_cfg()
    };
    let out = run_pipeline(
        &fixture_dir().join("pedestrian.tdes"),
        None,
        &cfg,
        dir.path(),
    )
    .unwrap();
    assert_eq!(out.exit_code, 2);
    assert!(
        out.summary.contains("initial state uncontrollably reaches bad set"),
        "{}",
        out.summary
    );
    println!("criterion 3a: PASS");
}

#[test]
fn criterion_3b_non_fifo_control_yields_no_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = NetworkConfig {
        fifo_control: false,
        ..nonfifo_cfg()
    };
    let out = run_pipeline(
        &fixture_dir().join("nonfifo_plant.tdes"),
        None,
        &cfg,
        dir.path(),
    )
    .unwrap();
    assert_eq!(out.exit_code, 2);
    println!("criterion 3b: PASS");
}

#[test]
fn criterion_4_supervisor_only_removes_second_command_at_start() {
    let start = Instant::now();
    let (g, ev) = load_plant("nonfifo_plant.tdes");
    let cfg = nonfifo_cfg();
    let np = build_networked_plant(&g, &ev, &cfg).unwrap();
    // The construction reproduces the fifteen-state reference automaton.
    assert_eq!(np.tdes.state_count(), 15);
    let fig = load_into("nonfifo_np_fig.tdes", &ev);
    assert!(np.tdes.language_equal(&fig, &ev).unwrap().is_none());

    let outcome = synthesize(&np, &ev, &cfg);
    let ns = outcome.supervisor().expect("supervisor exists");

    let keep: BTreeSet<_> = ev
        .supervisor_alphabet()
        .into_iter()
        .filter(|e| np.tdes.alphabet.contains(e))
        .collect();
    let projected = np.tdes.natural_projection(&keep, &ev).unwrap();
    // Not equal to the plain projection...
    assert!(ns.language_equal(&projected, &ev).unwrap().is_some());
    // ...but equal once b_e is removed at the initial state.
    let mut expected = projected.clone();
    let be = ev.lookup("b_e").unwrap();
    assert!(expected.remove_trans(expected.initial, be));
    let expected = expected.reach();
    assert!(
        ns.language_equal(&expected, &ev).unwrap().is_none(),
        "supervisor deviates beyond removing b_e at the initial state"
    );
    assert!(start.elapsed().as_secs() < 1);
    println!("criterion 4: PASS");
}

/// Fixture/configuration pairs that admit a supervisor, plus an optional
/// requirement.
fn solvable_cases() -> Vec<(&'static str, Option<&'static str>, NetworkConfig)> {
    vec![
        ("tandem.tdes", None, NetworkConfig { nc: 1, no: 1, lmax: 1, mmax: 1, ..Default::default() }),
        ("nonfifo_plant.tdes", None, nonfifo_cfg()),
        (
            "pedestrian.tdes",
            None,
            NetworkConfig { nc: 0, no: 0, lmax: 1, mmax: 2, ..Default::default() },
        ),
        (
            "obs_delay_plant.tdes",
            None,
            NetworkConfig { nc: 0, no: 1, lmax: 1, mmax: 2, ..Default::default() },
        ),
        (
            "ctrl_delay_plant.tdes",
            None,
            NetworkConfig { nc: 1, no: 0, lmax: 1, mmax: 1, ..Default::default() },
        ),
        (
            "req_plant.tdes",
            Some("req_forbid_d.tdes"),
            NetworkConfig { nc: 1, no: 1, lmax: 1, mmax: 1, ..Default::default() },
        ),
    ]
}

#[test]
fn criterion_5_verification_checks_pass_on_all_solvable_fixtures() {
    let start = Instant::now();
    for (plant, req, cfg) in solvable_cases() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_pipeline(
            &fixture_dir().join(plant),
            req.map(|r| fixture_dir().join(r)).as_deref(),
            &cfg,
            dir.path(),
        )
        .unwrap();
        assert_eq!(out.exit_code, 0, "{plant}: {}", out.summary);
        let expected_checks = if req.is_some() { 4 } else { 3 };
        assert_eq!(out.checks.len(), expected_checks, "{plant}");
        for check in &out.checks {
            assert!(check.passed(), "{plant}: {} failed: {}", check.check, check.detail);
        }
    }
    assert!(start.elapsed().as_secs() < 5, "criterion 5 must finish within 5 seconds");
    println!("criterion 5: PASS");
}

#[test]
fn criterion_6_bounded_language_properties() {
    let start = Instant::now();
    let depth = 10;
    let plant_events =
        |ev: &netsup::EventTable| -> BTreeSet<_> { ev.plant_alphabet().into_iter().collect() };

    // Networked-plant-level guarantees also hold on instances where synthesis
    // refuses, as long as the capacity assumptions are met.
    let mut np_cases = solvable_cases();
    np_cases.push(("pedestrian.tdes", None, pedestrian_cfg()));
    for (plant, req, cfg) in np_cases {
        let (g, ev) = load_plant(plant);
        let synthesis_plant = match req {
            Some(r) => {
                let r = load_into(r, &ev);
                g.sync_product(&r.complete()).reach()
            }
            None => g.clone(),
        };
        let np = build_networked_plant(&synthesis_plant, &ev, &cfg).unwrap();
        let plant_alpha = plant_events(&ev);

        // Networked behavior projects into the plant.
        for w in np.tdes.bounded_language(depth) {
            let pw = netsup::oracle::project_word(&w, &plant_alpha);
            assert!(
                synthesis_plant.accepts_word(&pw),
                "{plant}: networked word escapes the plant: {}",
                ev.render_word(&w)
            );
        }
        // Under the capacity assumptions the plant is fully covered and
        // commands can always be delivered with the full delay.
        if np.assumptions.initial_ticks_ok && np.assumptions.lmax_ok && np.assumptions.mmax_ok {
            for w in synthesis_plant.bounded_language(depth.min(8)) {
                assert!(
                    plant_word_covered(&np, &ev, &w),
                    "{plant}: plant word not covered: {}",
                    ev.render_word(&w)
                );
            }
            for w in synthesis_plant.bounded_language(5) {
                let s = synthesis_plant.run(synthesis_plant.initial, &w).unwrap();
                for (e, _) in synthesis_plant.outgoing(s) {
                    if ev.is_controllable_active(e) {
                        assert!(
                            netsup::oracle::command_on_time(&np.tdes, &w, e, &ev, &cfg),
                            "{plant}: no timely command witness for {} after `{}`",
                            ev.name(e),
                            ev.render_word(&w)
                        );
                    }
                }
            }
        }
    }

    for (plant, req, cfg) in solvable_cases() {
        let (g, ev) = load_plant(plant);
        let synthesis_plant = match req {
            Some(r) => {
                let r = load_into(r, &ev);
                g.sync_product(&r.complete()).reach()
            }
            None => g.clone(),
        };
        let np = build_networked_plant(&synthesis_plant, &ev, &cfg).unwrap();
        let plant_alpha = plant_events(&ev);

        let outcome = synthesize(&np, &ev, &cfg);
        let ns = outcome.supervisor().expect("solvable case");
        let nsp = compose(ns, &synthesis_plant, &ev, &cfg).unwrap();

        // Supervised behavior projects into the plant as well.
        for w in nsp.tdes.bounded_language(depth) {
            let pw = netsup::oracle::project_word(&w, &plant_alpha);
            assert!(synthesis_plant.accepts_word(&pw), "{plant}: {}", ev.render_word(&w));
        }

        // The asynchronous composition coincides with the synchronous product
        // against the networked plant.
        let product = ns.sync_product(&np.tdes);
        assert!(
            nsp.tdes.language_equal(&product, &ev).unwrap().is_none(),
            "{plant}: composition differs from product"
        );

        // Channel components agree between the networked plant and the
        // supervised plant on every shared word.
        for w in nsp.tdes.bounded_language(8) {
            let z = nsp.tdes.run(nsp.tdes.initial, &w).unwrap();
            let x = np.tdes.run(np.tdes.initial, &w).expect("NSP words are NP words");
            let zd = &nsp.decode[z.0];
            let xd = &np.decode[x.0];
            assert_eq!(zd.m, xd.m, "{plant}: observation channels diverge on {}", ev.render_word(&w));
            assert_eq!(zd.l, xd.l, "{plant}: control channels diverge on {}", ev.render_word(&w));
        }
    }
    assert!(start.elapsed().as_secs() < 60, "criterion 6 must finish within a minute");
    println!("criterion 6: PASS");
}

#[test]
fn criterion_7_no_proper_candidate_exceeds_synthesis() {
    let start = Instant::now();

    // The pedestrian instance: refusal, certified exhaustively.
    let (g, ev) = load_plant("pedestrian.tdes");
    let cfg = pedestrian_cfg();
    let np = build_networked_plant(&g, &ev, &cfg).unwrap();
    let report = oracle_max_permissive(&np, &g, &ev, &cfg, None, 12, 10);
    assert_eq!(report.verdict, Verdict::Pass, "{}", report.detail);

    // Twenty random instances within the budget.
    let mut rng = netsup_test_rng(0x6e657473);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 20 {
        attempts += 1;
        assert!(attempts < 2000, "random instance generation stalled");
        let (g, ev) = random_plant(&mut rng);
        let cfg = NetworkConfig {
            nc: rng.int(2) as u32,
            no: rng.int(2) as u32,
            lmax: 2,
            mmax: 2,
            ..NetworkConfig::default()
        };
        let Ok(np) = build_networked_plant(&g, &ev, &cfg) else { continue };
        let enabling_edges = np
            .tdes
            .transitions()
            .filter(|&(_, e, _)| ev.is_enabling(e))
            .count();
        if enabling_edges == 0 || enabling_edges > 12 || np.tdes.state_count() > 40 {
            continue;
        }
        // Keep the per-instance candidate space at desk scale: the candidates
        // are sub-automata of the observer, so count its droppable edges.
        let keep: BTreeSet<_> = ev
            .supervisor_alphabet()
            .into_iter()
            .filter(|e| np.tdes.alphabet.contains(e))
            .collect();
        let observer = np.tdes.natural_projection(&keep, &ev).unwrap();
        let droppable = observer
            .transitions()
            .filter(|&(_, e, _)| ev.is_enabling(e) || ev.is_tick(e))
            .count();
        if droppable > 12 {
            continue;
        }
        let outcome = synthesize(&np, &ev, &cfg);
        let report =
            oracle_max_permissive(&np, &g, &ev, &cfg, outcome.supervisor(), 12, 6);
        if report.verdict == Verdict::NotEvaluated {
            continue;
        }
        assert_eq!(
            report.verdict,
            Verdict::Pass,
            "instance {checked}: {}",
            report.detail
        );
        checked += 1;
    }
    assert!(start.elapsed().as_secs() < 600, "criterion 7 must finish within 10 minutes");
    println!("criterion 7: PASS ({checked} random instances, pedestrian refusal certified)");
}

#[test]
fn criterion_8_pipeline_artifacts_are_deterministic() {
    for (plant, req, cfg) in [
        ("pedestrian.tdes", None, pedestrian_cfg()),
        (
            "req_plant.tdes",
            Some("req_forbid_d.tdes"),
            NetworkConfig { nc: 1, no: 1, lmax: 1, mmax: 1, ..Default::default() },
        ),
        ("nonfifo_plant.tdes", None, nonfifo_cfg()),
    ] {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let r1 = run_pipeline(
            &fixture_dir().join(plant),
            req.map(|r| fixture_dir().join(r)).as_deref(),
            &cfg,
            d1.path(),
        )
        .unwrap();
        let r2 = run_pipeline(
            &fixture_dir().join(plant),
            req.map(|r| fixture_dir().join(r)).as_deref(),
            &cfg,
            d2.path(),
        )
        .unwrap();
        assert_eq!(r1.exit_code, r2.exit_code);
        assert_eq!(r1.written.len(), r2.written.len());
        for (a, b) in r1.written.iter().zip(&r2.written) {
            assert_eq!(a.file_name(), b.file_name());
            let ca = fs::read(a).unwrap();
            let cb = fs::read(b).unwrap();
            assert_eq!(ca, cb, "{plant}: artifact {:?} differs between runs", a.file_name());
        }
    }
    println!("criterion 8: PASS");
}

// Small deterministic generator for random plants; kept local to the
// acceptance suite so the oracle check does not depend on test-only crates.
pub struct TestRng(u64);

pub fn netsup_test_rng(seed: u64) -> TestRng {
    TestRng(seed.max(1))
}

impl TestRng {
    fn next(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545F4914F6CDD1D)
    }

    pub fn int(&mut self, bound: usize) -> usize {
        (self.next() % bound as u64) as usize
    }

    pub fn chance(&mut self, percent: usize) -> bool {
        self.int(100) < percent
    }
}

/// Random small plant: up to 3 states, one controllable and one
/// uncontrollable event (both non-forcible, which keeps the oracle's
/// candidate pruning exact), tick-heavy so windows stay bounded, marked set
/// nonempty.
pub fn random_plant(rng: &mut TestRng) -> (netsup::tdes::Tdes, netsup::EventTable) {
    let mut ev = netsup::EventTable::new();
    let c = ev.add_active("c", true, false).unwrap();
    let u = ev.add_active("u", false, false).unwrap();
    ev.derive_network_events().unwrap();
    let tick = ev.tick();

    let n = 2 + rng.int(2);
    let mut t = netsup::tdes::Tdes::new("random", [tick, c, u], "s0");
    for i in 1..n {
        t.add_state(&format!("s{i}"));
    }
    let states: Vec<_> = t.states().collect();
    for &s in &states {
        // Always give tick somewhere so time can progress.
        let dst = states[rng.int(n)];
        let _ = t.add_trans(s, tick, dst);
        if rng.chance(55) {
            let dst = states[rng.int(n)];
            let _ = t.add_trans(s, c, dst);
        }
        if rng.chance(40) {
            let dst = states[rng.int(n)];
            let _ = t.add_trans(s, u, dst);
        }
    }
    for &s in &states {
        if rng.chance(40) {
            t.mark(s);
        }
    }
    if t.marked.is_empty() {
        let s = states[rng.int(n)];
        t.mark(s);
    }
    (t, ev)
}
