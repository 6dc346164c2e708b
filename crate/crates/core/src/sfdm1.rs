//! Fair streaming selection for exactly two groups: one group-blind and two
//! group-specific candidates per guess, then swap-based rebalancing.

use std::collections::HashSet;
use std::sync::Arc;

use crate::dataset::Element;
use crate::error::{invalid, FdmError, Result};
use crate::guesses::{Arrival, Candidate, GuessLadder};
use crate::metric::{diversity, set_distance};
use crate::stream::{FairSolution, FairStream, Gate, StreamParams};

#[derive(Debug, Clone)]
pub struct Sfdm1Guess {
    pub blind: Candidate,
    pub specific: [Candidate; 2],
}

impl Sfdm1Guess {
    pub fn mu(&self) -> f64 {
        self.blind.mu()
    }
}

/// The rebalanced group-blind candidate of one guess.
#[derive(Debug, Clone)]
pub struct BalancedGuess {
    pub mu: f64,
    pub members: Vec<Arrival>,
    pub diversity: f64,
}

#[derive(Debug, Clone)]
pub struct Sfdm1State {
    params: StreamParams,
    ladder: GuessLadder,
    guesses: Vec<Sfdm1Guess>,
    gate: Gate,
    seen: u64,
}

impl Sfdm1State {
    pub fn new(params: StreamParams) -> Result<Self> {
        let ladder = params.validate()?;
        if params.num_groups() != 2 {
            return Err(invalid(format!(
                "the two-group solver needs exactly 2 groups, got {}",
                params.num_groups()
            )));
        }
        let k = params.k();
        let guesses = ladder
            .values()
            .iter()
            .map(|&mu| Sfdm1Guess {
                blind: Candidate::new(mu, k, None),
                specific: [
                    Candidate::new(mu, params.caps[0], Some(0)),
                    Candidate::new(mu, params.caps[1], Some(1)),
                ],
            })
            .collect();
        let gate = Gate::new(2, params.metric);
        Ok(Self {
            params,
            ladder,
            guesses,
            gate,
            seen: 0,
        })
    }

    pub fn guesses(&self) -> &[Sfdm1Guess] {
        &self.guesses
    }

    pub fn params(&self) -> &StreamParams {
        &self.params
    }

    fn eligible(&self, g: &Sfdm1Guess) -> bool {
        g.blind.len() == self.params.k()
            && (0..2).all(|i| g.specific[i].len() == self.params.caps[i])
    }

    /// Rebalances every eligible guess and returns them in ladder order.
    pub fn finalize_detailed(&self) -> Vec<BalancedGuess> {
        self.guesses
            .iter()
            .filter(|g| self.eligible(g))
            .map(|g| {
                let members = self.balance(g);
                let diversity = diversity(
                    self.params.metric,
                    members.iter().map(|m| m.element.as_ref()),
                );
                BalancedGuess {
                    mu: g.mu(),
                    members,
                    diversity,
                }
            })
            .collect()
    }

    fn balance(&self, g: &Sfdm1Guess) -> Vec<Arrival> {
        let metric = self.params.metric;
        let k = self.params.k();
        let mut set: Vec<Arrival> = g.blind.members().to_vec();
        for under in 0..2 {
            let cap = self.params.caps[under];
            let mut count = set.iter().filter(|a| a.group() == under).count();
            if count >= cap {
                continue;
            }
            // insert the group's specific members farthest from its current members
            while count < cap {
                let present: HashSet<u64> = set.iter().map(Arrival::id).collect();
                let own: Vec<&Element> = group_members(&set, under).collect();
                let pick = g.specific[under]
                    .members()
                    .iter()
                    .filter(|x| !present.contains(&x.id()))
                    .map(|x| (set_distance(metric, &x.element, own.iter().copied()), x))
                    .fold(None::<(f64, &Arrival)>, |best, (d, x)| match best {
                        Some((bd, _)) if bd >= d => best,
                        _ => Some((d, x)),
                    })
                    .map(|(_, x)| x.clone())
                    .expect("specific candidate holds cap distinct members");
                set.push(pick);
                count += 1;
            }
            // then drop the other group's members closest to it
            let own: Vec<Element> = group_members(&set, under).cloned().collect();
            while set.len() > k {
                let (pos, _) = set
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.group() != under)
                    .map(|(i, a)| (i, set_distance(metric, &a.element, &own)))
                    .fold(None::<(usize, f64)>, |best, (i, d)| match best {
                        Some((_, bd)) if bd <= d => best,
                        _ => Some((i, d)),
                    })
                    .expect("over-filled group has members to remove");
                set.remove(pos);
            }
        }
        set
    }
}

fn group_members(set: &[Arrival], group: usize) -> impl Iterator<Item = &Element> {
    set.iter()
        .filter(move |a| a.group() == group)
        .map(|a| a.element.as_ref())
}

impl FairStream for Sfdm1State {
    fn process(&mut self, element: Arc<Element>) -> Result<()> {
        self.gate.check(&element)?;
        let x = Arrival::new(self.seen, element);
        self.seen += 1;
        let metric = self.params.metric;
        let group = x.group();
        for g in &mut self.guesses {
            g.blind.offer(&x, metric);
            g.specific[group].offer(&x, metric);
        }
        Ok(())
    }

    fn finalize(&self) -> Result<FairSolution> {
        let balanced = self.finalize_detailed();
        let best = balanced
            .iter()
            .fold(None::<&BalancedGuess>, |best, b| match best {
                Some(cur) if cur.diversity >= b.diversity => best,
                _ => Some(b),
            });
        match best {
            Some(b) => Ok(FairSolution {
                mu: b.mu,
                diversity: b.diversity,
                elements: b.members.iter().map(|m| m.element.clone()).collect(),
            }),
            None => Err(self.infeasible()),
        }
    }

    fn ladder(&self) -> &GuessLadder {
        &self.ladder
    }

    fn candidates(&self) -> Vec<&Candidate> {
        self.guesses
            .iter()
            .flat_map(|g| std::iter::once(&g.blind).chain(g.specific.iter()))
            .collect()
    }
}

impl Sfdm1State {
    fn infeasible(&self) -> FdmError {
        // the smallest guess holds the largest candidates
        let sizes = self.guesses.first().map(|g| {
            format!(
                "blind {}/{}, group 0 {}/{}, group 1 {}/{}",
                g.blind.len(),
                self.params.k(),
                g.specific[0].len(),
                self.params.caps[0],
                g.specific[1].len(),
                self.params.caps[1]
            )
        });
        FdmError::Infeasible(format!(
            "no guess filled all candidates after {} elements (smallest guess: {})",
            self.seen,
            sizes.unwrap_or_default()
        ))
    }
}
