//! Cycling games for the quota-vote family: constructions whose dynamics
//! provably must cycle from the bundled start partition, plus the adapted
//! variants whose first deviator starts in a singleton (and whose removal
//! makes the dynamics converge).

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::game::{rat, AgentId, CardinalGame, GameClass, Rational};
use crate::oracle::DEFAULT_NODE_CAP;
use crate::partition::{Coalition, DeviationTarget, Partition};
use crate::stability::StabilityNotion;

use super::bundle::{
    CheckKind, ExpectedOutcome, GadgetBundle, ManifestCheck, NotionRef, Script,
};
use crate::oracle::Verdict;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QuotaGadgetError {
    QuotaNotBelowOne(String),
}

impl fmt::Display for QuotaGadgetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuotaGadgetError::QuotaNotBelowOne(q) => {
                write!(f, "quota must lie in [0, 1), got {q}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for QuotaGadgetError {}

/// Smallest natural number `t'` with `t' >= q * (1 + t')` — the approval
/// count needed to outvote a single objector. Exists for every `q < 1`.
pub fn approval_threshold(q: &Rational) -> Result<usize, QuotaGadgetError> {
    if *q >= Rational::one() || *q < rat(0) {
        return Err(QuotaGadgetError::QuotaNotBelowOne(alloc::format!("{q}")));
    }
    let mut t = 0usize;
    loop {
        if rat(t as i64) >= q * rat(1 + t as i64) {
            return Ok(t);
        }
        t += 1;
    }
}

struct QuotaOutLayout {
    t: usize,
    big_t: i64,
    m: usize,
}

impl QuotaOutLayout {
    fn new(q_out: &Rational) -> Result<QuotaOutLayout, QuotaGadgetError> {
        let threshold = approval_threshold(q_out)?;
        Ok(QuotaOutLayout::with_t(3usize.max(threshold + 1)))
    }

    /// Ring size tuned for the adapted variant. After the singleton agent is
    /// removed, the second forced move (agent `t` abandoning the first block)
    /// faces `t - 2` approving and one objecting voter, and the walkout that
    /// could follow it (agent `t - 1`) faces `t - 3` against one; picking the
    /// smallest `t >= 3` that lets the former pass the out-quota while the
    /// latter fails it pins the post-removal dynamics to exactly two steps.
    /// For a zero quota no such `t` exists and the walkout stays possible.
    fn adapted(q_out: &Rational) -> Result<QuotaOutLayout, QuotaGadgetError> {
        if q_out.is_zero() {
            return QuotaOutLayout::new(q_out);
        }
        let threshold = approval_threshold(q_out)?;
        let mut t = 3usize.max(threshold + 1);
        while rat(t as i64 - 2) < q_out * rat(t as i64 - 1) {
            t += 1;
        }
        Ok(QuotaOutLayout::with_t(t))
    }

    fn with_t(t: usize) -> QuotaOutLayout {
        let big_t = (t * t - t) as i64;
        QuotaOutLayout { t, big_t, m: 3 * t + 2 }
    }

    fn grouping(&self, j: usize) -> AgentId {
        self.m + j
    }

    fn game(&self, class: GameClass) -> CardinalGame {
        let (t, m) = (self.t, self.m);
        let mut game = CardinalGame::new(m + 3, class);
        for i in 0..m {
            let at = |offset: usize| (i + offset) % m;
            game.set_int(i, at(1), self.big_t + 2 * t as i64);
            for j in 2..=t {
                game.set_int(i, at(j), -1);
            }
            for j in t + 1..=2 * t + 1 {
                game.set_int(i, at(j), -self.big_t);
            }
            for j in 2 * t + 2..=3 * t + 1 {
                game.set_int(i, at(j), t as i64);
            }
            for g in 0..3 {
                game.set_int(i, self.grouping(g), -self.big_t);
            }
        }
        game
    }

    /// The three coalitions of the cycling start partition (for index 0):
    /// interval coalitions around the grouping agents, with the next
    /// deviator `a_0` sitting in the third one.
    fn blocks(&self) -> (Vec<AgentId>, Vec<AgentId>, Vec<AgentId>) {
        let t = self.t;
        let mut c1: Vec<AgentId> = (1..=t).collect();
        c1.push(self.grouping(0));
        let mut c2: Vec<AgentId> = (t + 1..=2 * t + 1).collect();
        c2.push(self.grouping(1));
        let mut c3: Vec<AgentId> = (2 * t + 2..=3 * t + 1).collect();
        c3.push(0);
        c3.push(self.grouping(2));
        (c1, c2, c3)
    }
}

fn quota_metadata(pairs: &[(&str, i64)], quotas: &[(&str, &Rational)]) -> BTreeMap<String, Rational> {
    let mut meta = BTreeMap::new();
    for (k, v) in pairs {
        meta.insert(String::from(*k), rat(*v));
    }
    for (k, q) in quotas {
        meta.insert(String::from(*k), (*q).clone());
    }
    meta
}

/// The must-cycle construction for rules between `(q_out, 1)`-vote and Nash
/// deviations: a ring of `3t + 2` deviating agents rotating through three
/// grouping coalitions, with exactly one allowed move per partition.
pub fn gen_quota_out_cycle(
    class: GameClass,
    q_out: &Rational,
) -> Result<GadgetBundle, QuotaGadgetError> {
    let layout = QuotaOutLayout::new(q_out)?;
    let (t, m) = (layout.t, layout.m);
    let game = layout.game(class);
    let (c1, c2, c3) = layout.blocks();
    let start = Partition::from_coalitions(
        m + 3,
        alloc::vec![
            Coalition::of(&c1),
            Coalition::of(&c2),
            Coalition::of(&c3),
        ],
    )
    .expect("valid start");
    let notion = StabilityNotion::vote(q_out.clone(), Rational::one());

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    scripts.insert(
        "cycle-step".into(),
        alloc::vec![(0, DeviationTarget::Join(Coalition::of(&c1)))],
    );

    let manifest = alloc::vec![
        ManifestCheck {
            name: "unique-nash-move-at-start".into(),
            check: CheckKind::UniqueMoveAtStart { notion: NotionRef::Nash },
        },
        ManifestCheck {
            name: "cycle-step-passes-quotas".into(),
            check: CheckKind::ScriptReplays {
                script: "cycle-step".into(),
                notion: NotionRef::Bundle,
            },
        },
        ManifestCheck {
            name: "one-move-shifts-indices".into(),
            check: CheckKind::ShiftPeriodicity {
                notion: NotionRef::Nash,
                shift: 2 * t + 1,
                deviators: m,
                grouping: alloc::vec![layout.grouping(0), layout.grouping(1), layout.grouping(2)],
                grouping_shift: 2,
            },
        },
        ManifestCheck {
            name: "dynamics-cycle".into(),
            check: CheckKind::RunFirstInOrder {
                notion: NotionRef::Bundle,
                max_steps: 4 * m,
                expect: ExpectedOutcome::Cycles,
            },
        },
        ManifestCheck {
            name: "no-reachable-stable-partition".into(),
            check: CheckKind::DecidePcd {
                notion: NotionRef::Bundle,
                expect: Verdict::No,
                node_cap: DEFAULT_NODE_CAP,
            },
        },
    ];

    Ok(GadgetBundle {
        game,
        start,
        notion,
        scripts,
        manifest,
        metadata: quota_metadata(
            &[
                ("t", t as i64),
                ("T", layout.big_t),
                ("m", m as i64),
                ("n", (m + 3) as i64),
                ("threshold", approval_threshold(q_out)? as i64),
                ("shift", (2 * t + 1) as i64),
            ],
            &[("q_out", q_out)],
        ),
    })
}

/// Same game as [`gen_quota_out_cycle`], but the next deviator starts in a
/// singleton: the dynamics can still cycle, yet after removing her they
/// converge in exactly two first-in-order steps.
pub fn gen_quota_out_cycle_adapted(
    class: GameClass,
    q_out: &Rational,
) -> Result<GadgetBundle, QuotaGadgetError> {
    let layout = QuotaOutLayout::adapted(q_out)?;
    let (t, m) = (layout.t, layout.m);
    let game = layout.game(class);
    let (c1, c2, c3) = layout.blocks();
    let c3_without: Vec<AgentId> = c3.into_iter().filter(|&a| a != 0).collect();
    let start = Partition::from_coalitions(
        m + 3,
        alloc::vec![
            Coalition::singleton(0),
            Coalition::of(&c1),
            Coalition::of(&c2),
            Coalition::of(&c3_without),
        ],
    )
    .expect("valid start");
    let notion = StabilityNotion::vote(q_out.clone(), Rational::one());

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    scripts.insert(
        "cycle-step".into(),
        alloc::vec![(0, DeviationTarget::Join(Coalition::of(&c1)))],
    );

    let mut manifest = alloc::vec![
        ManifestCheck {
            name: "first-move-is-by-the-singleton-agent".into(),
            check: CheckKind::FirstMoveBy {
                notion: NotionRef::Bundle,
                agent: 0,
            },
        },
        ManifestCheck {
            name: "dynamics-can-cycle".into(),
            check: CheckKind::RunFirstInOrder {
                notion: NotionRef::Bundle,
                max_steps: 4 * m + 2,
                expect: ExpectedOutcome::Cycles,
            },
        },
    ];
    // Under a strictly positive out-quota the two forced moves are the only
    // ones left once the singleton agent is removed. With no quota at all the
    // low-value members of the first block can still walk out afterwards, so
    // only the convergence claim survives.
    if !q_out.is_zero() {
        manifest.push(ManifestCheck {
            name: "removal-converges-in-two-steps".into(),
            check: CheckKind::AfterRemovalConvergesExactly {
                agent: 0,
                notion: NotionRef::Bundle,
                steps: 2,
                max_steps: 4 * m + 2,
            },
        });
    }
    manifest.push(ManifestCheck {
        name: "removal-makes-every-sequence-converge".into(),
        check: CheckKind::AfterRemovalNcdYes {
            agent: 0,
            notion: NotionRef::Bundle,
            node_cap: DEFAULT_NODE_CAP,
        },
    });

    Ok(GadgetBundle {
        game,
        start,
        notion,
        scripts,
        manifest,
        metadata: quota_metadata(
            &[
                ("t", t as i64),
                ("T", layout.big_t),
                ("m", m as i64),
                ("n", (m + 3) as i64),
                ("singleton_agent", 0),
            ],
            &[("q_out", q_out)],
        ),
    })
}

struct QuotaInLayout {
    t: usize,
    m: usize,
}

impl QuotaInLayout {
    fn new(q_in: &Rational) -> Result<QuotaInLayout, QuotaGadgetError> {
        let threshold = approval_threshold(q_in)?;
        let t = 3usize.max(threshold + 1);
        Ok(QuotaInLayout { t, m: 2 * t + 1 })
    }

    fn grouping(&self, j: usize) -> AgentId {
        self.m + j
    }

    fn game(&self, class: GameClass) -> CardinalGame {
        let (t, m) = (self.t, self.m);
        let mut game = CardinalGame::new(m + 2, class);
        for i in 0..m {
            let at = |offset: usize| (i + offset) % m;
            game.set_int(i, at(t + 1), -(t as i64));
            for j in t + 2..=2 * t {
                game.set_int(i, at(j), 1);
            }
            for g in 0..2 {
                game.set_int(i, self.grouping(g), 1);
            }
        }
        game
    }

    /// The two coalitions of the cycling start (index 0), with the next
    /// deviator `a_0` in the second one.
    fn blocks(&self) -> (Vec<AgentId>, Vec<AgentId>) {
        let t = self.t;
        let mut c1: Vec<AgentId> = (1..=t).collect();
        c1.push(self.grouping(0));
        let mut c2: Vec<AgentId> = (t + 1..=2 * t).collect();
        c2.push(0);
        c2.push(self.grouping(1));
        (c1, c2)
    }
}

/// The must-cycle construction for rules between `(1, q_in)`-vote and Nash
/// deviations: `2t + 1` deviating agents alternating between two grouping
/// coalitions.
pub fn gen_quota_in_cycle(
    class: GameClass,
    q_in: &Rational,
) -> Result<GadgetBundle, QuotaGadgetError> {
    let layout = QuotaInLayout::new(q_in)?;
    let (t, m) = (layout.t, layout.m);
    let game = layout.game(class);
    let (c1, c2) = layout.blocks();
    let start = Partition::from_coalitions(
        m + 2,
        alloc::vec![Coalition::of(&c1), Coalition::of(&c2)],
    )
    .expect("valid start");
    let notion = StabilityNotion::vote(Rational::one(), q_in.clone());

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    scripts.insert(
        "cycle-step".into(),
        alloc::vec![(0, DeviationTarget::Join(Coalition::of(&c1)))],
    );

    let manifest = alloc::vec![
        ManifestCheck {
            name: "unique-nash-move-at-start".into(),
            check: CheckKind::UniqueMoveAtStart { notion: NotionRef::Nash },
        },
        ManifestCheck {
            name: "cycle-step-passes-quotas".into(),
            check: CheckKind::ScriptReplays {
                script: "cycle-step".into(),
                notion: NotionRef::Bundle,
            },
        },
        ManifestCheck {
            name: "one-move-shifts-indices".into(),
            check: CheckKind::ShiftPeriodicity {
                notion: NotionRef::Nash,
                shift: t,
                deviators: m,
                grouping: alloc::vec![layout.grouping(0), layout.grouping(1)],
                grouping_shift: 1,
            },
        },
        ManifestCheck {
            name: "dynamics-cycle".into(),
            check: CheckKind::RunFirstInOrder {
                notion: NotionRef::Bundle,
                max_steps: 4 * m,
                expect: ExpectedOutcome::Cycles,
            },
        },
        ManifestCheck {
            name: "no-reachable-stable-partition".into(),
            check: CheckKind::DecidePcd {
                notion: NotionRef::Bundle,
                expect: Verdict::No,
                node_cap: DEFAULT_NODE_CAP,
            },
        },
    ];

    Ok(GadgetBundle {
        game,
        start,
        notion,
        scripts,
        manifest,
        metadata: quota_metadata(
            &[
                ("t", t as i64),
                ("m", m as i64),
                ("n", (m + 2) as i64),
                ("threshold", approval_threshold(q_in)? as i64),
                ("shift", t as i64),
            ],
            &[("q_in", q_in)],
        ),
    })
}

/// Adapted variant of [`gen_quota_in_cycle`]: the next deviator starts in a
/// singleton; removing her leaves a partition that is already stable, so the
/// reduced dynamics converge without a single deviation.
pub fn gen_quota_in_cycle_adapted(
    class: GameClass,
    q_in: &Rational,
) -> Result<GadgetBundle, QuotaGadgetError> {
    let layout = QuotaInLayout::new(q_in)?;
    let (t, m) = (layout.t, layout.m);
    let game = layout.game(class);
    let (c1, c2) = layout.blocks();
    let c2_without: Vec<AgentId> = c2.into_iter().filter(|&a| a != 0).collect();
    let start = Partition::from_coalitions(
        m + 2,
        alloc::vec![
            Coalition::singleton(0),
            Coalition::of(&c1),
            Coalition::of(&c2_without),
        ],
    )
    .expect("valid start");
    let notion = StabilityNotion::vote(Rational::one(), q_in.clone());

    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    scripts.insert(
        "cycle-step".into(),
        alloc::vec![(0, DeviationTarget::Join(Coalition::of(&c1)))],
    );

    let manifest = alloc::vec![
        ManifestCheck {
            name: "first-move-is-by-the-singleton-agent".into(),
            check: CheckKind::FirstMoveBy {
                notion: NotionRef::Bundle,
                agent: 0,
            },
        },
        ManifestCheck {
            name: "dynamics-can-cycle".into(),
            check: CheckKind::RunFirstInOrder {
                notion: NotionRef::Bundle,
                max_steps: 4 * m + 2,
                expect: ExpectedOutcome::Cycles,
            },
        },
        ManifestCheck {
            name: "removal-is-already-stable".into(),
            check: CheckKind::AfterRemovalConvergesExactly {
                agent: 0,
                notion: NotionRef::Bundle,
                steps: 0,
                max_steps: 4 * m + 2,
            },
        },
        ManifestCheck {
            name: "removal-makes-every-sequence-converge".into(),
            check: CheckKind::AfterRemovalNcdYes {
                agent: 0,
                notion: NotionRef::Bundle,
                node_cap: DEFAULT_NODE_CAP,
            },
        },
    ];

    Ok(GadgetBundle {
        game,
        start,
        notion,
        scripts,
        manifest,
        metadata: quota_metadata(
            &[
                ("t", t as i64),
                ("m", m as i64),
                ("n", (m + 2) as i64),
                ("singleton_agent", 0),
            ],
            &[("q_in", q_in)],
        ),
    })
}
