//! A polynomial-size ASHG whose CIS dynamics admit an exponentially long
//! deviation sequence: counting agents climb through track coalitions like
//! a binary counter, collapsing groups onto single tracks between steps.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::game::{rat, AgentId, CardinalGame, GameClass, Rational};
use crate::partition::{DeviationTarget, Partition};
use crate::stability::StabilityNotion;

use super::bundle::{CheckKind, GadgetBundle, ManifestCheck, NotionRef, Script};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSizeTooSmall(pub usize);

impl fmt::Display for GroupSizeTooSmall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "the construction needs k >= 5, got {}", self.0)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GroupSizeTooSmall {}

struct Layout {
    k: usize,
}

impl Layout {
    /// `b_i^j` (group `i` in `1..=k`, member `j` in `1..=i`).
    fn counter(&self, i: usize, j: usize) -> AgentId {
        debug_assert!(1 <= i && i <= self.k && 1 <= j && j <= i);
        i * (i - 1) / 2 + (j - 1)
    }

    /// `t_i` for `i` in `1..=k+1`.
    fn track(&self, i: usize) -> AgentId {
        debug_assert!(1 <= i && i <= self.k + 1);
        self.k * (self.k + 1) / 2 + (i - 1)
    }

    fn agent_count(&self) -> usize {
        self.k * (self.k + 1) / 2 + self.k + 1
    }

    /// `f(x) = x^(k·x)`, the per-member worth of group `x`.
    fn group_worth(&self, x: usize) -> Rational {
        let base = BigInt::from(x);
        BigRational::from_integer(base.pow((self.k * x) as u32))
    }
}

struct ScheduleBuilder {
    layout: Layout,
    state: Partition,
    script: Script,
}

impl ScheduleBuilder {
    fn join_track(&mut self, agent: AgentId, track_index: usize) {
        let track_agent = self.layout.track(track_index);
        let target = DeviationTarget::Join(self.state.coalition_of(track_agent).clone());
        self.state = self
            .state
            .apply_deviation(agent, &target)
            .expect("schedule moves are legal");
        self.script.push((agent, target));
    }

    /// Move `B_{<=i}` from their shared track onto the highest track in
    /// `tracks` (ascending track indices, `|tracks| == i + 1`).
    fn collapse(&mut self, i: usize, tracks: &[usize]) {
        debug_assert_eq!(tracks.len(), i + 1);
        let top = *tracks.last().unwrap();
        if i == 1 {
            self.join_track(self.layout.counter(1, 1), top);
            return;
        }
        // First sub-call: park the smaller groups off the top track.
        let without_top = &tracks[..tracks.len() - 1];
        self.collapse(i - 1, without_top);
        let parked = *without_top.last().unwrap();
        // Spread group i over the remaining tracks, one member per track.
        let spread: Vec<usize> = tracks.iter().copied().filter(|&t| t != parked).collect();
        for (j, &t) in spread.iter().enumerate() {
            self.join_track(self.layout.counter(i, j + 1), t);
        }
        // Second sub-call: bring the smaller groups up to the top track.
        self.collapse(i - 1, &spread);
        // Finally collect group i on the top track (its last member is
        // already there).
        for j in 1..i {
            self.join_track(self.layout.counter(i, j), top);
        }
    }
}

/// Generate the exponential-dynamics family for `k >= 5`: `k(k+1)/2`
/// counting agents, `k+1` track agents, and a scripted CIS sequence of at
/// least `2^(k-1)` deviations from the singleton partition.
pub fn gen_cis_exponential(k: usize) -> Result<GadgetBundle, GroupSizeTooSmall> {
    if k < 5 {
        return Err(GroupSizeTooSmall(k));
    }
    let layout = Layout { k };
    let n = layout.agent_count();
    let mut game = CardinalGame::new(n, GameClass::Ashg);
    for i in 1..=k {
        for j in 1..=i {
            let b = layout.counter(i, j);
            for ti in 1..=k + 1 {
                game.set(b, layout.track(ti), rat(ti as i64));
            }
            for i2 in i + 1..=k {
                let worth = layout.group_worth(i2);
                for j2 in 1..=i2 {
                    game.set(b, layout.counter(i2, j2), worth.clone());
                }
            }
        }
    }

    let mut builder = ScheduleBuilder {
        state: Partition::singletons(n),
        script: Script::new(),
        layout,
    };
    // Set-up: everyone below group k gathers on track 1; group k spreads
    // over tracks 2..=k+1.
    for i in 1..k {
        for j in 1..=i {
            builder.join_track(builder.layout.counter(i, j), 1);
        }
    }
    for j in 1..=k {
        builder.join_track(builder.layout.counter(k, j), j + 1);
    }
    let upper_tracks: Vec<usize> = (2..=k + 1).collect();
    builder.collapse(k - 1, &upper_tracks);

    let min_len = 1usize << (k - 1);
    let mut scripts: BTreeMap<String, Script> = BTreeMap::new();
    scripts.insert("count-up".into(), builder.script);

    let manifest = alloc::vec![
        ManifestCheck {
            name: "script-replays".into(),
            check: CheckKind::ScriptReplays {
                script: "count-up".into(),
                notion: NotionRef::Cis,
            },
        },
        ManifestCheck {
            name: "every-step-is-cis".into(),
            check: CheckKind::ScriptStepsCis {
                script: "count-up".into(),
                except: Vec::new(),
            },
        },
        ManifestCheck {
            name: "script-exponentially-long".into(),
            check: CheckKind::ScriptLengthAtLeast {
                script: "count-up".into(),
                min: min_len,
            },
        },
    ];

    let mut metadata = BTreeMap::new();
    metadata.insert(String::from("k"), rat(k as i64));
    metadata.insert(String::from("n"), rat(n as i64));
    metadata.insert(String::from("min_script_len"), rat(min_len as i64));

    Ok(GadgetBundle {
        game,
        start: Partition::singletons(n),
        notion: StabilityNotion::vote(Rational::one(), Rational::one()),
        scripts,
        manifest,
        metadata,
    })
}
