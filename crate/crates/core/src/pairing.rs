//! Pair formation for matched and unmatched win-ratio analyses.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::types::{Arm, MatchedPair, PatientRecord};

/// Matched pairs plus bookkeeping on who was left out.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub pairs: Vec<MatchedPair>,
    pub stratified: bool,
    /// Treatment patients in surplus strata that got no partner.
    pub unpaired_treatment: usize,
    pub unpaired_control: usize,
    /// Strata in which one arm was empty, so no pair could be formed.
    pub strata_without_pairs: usize,
}

impl Pairing {
    pub fn unpaired(&self) -> usize {
        self.unpaired_treatment + self.unpaired_control
    }
}

/// Indices of `cohort` grouped by stratum (a single group keyed 0 when
/// unstratified). Groups iterate in stratum order.
pub fn group_by_stratum<O>(cohort: &[PatientRecord<O>], stratified: bool) -> BTreeMap<u32, Vec<usize>> {
    let mut groups: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, p) in cohort.iter().enumerate() {
        let key = if stratified { p.stratum } else { 0 };
        groups.entry(key).or_default().push(i);
    }
    groups
}

/// Randomly pairs treatment with control patients, within strata when
/// `stratified`. Each group's members are shuffled by `rng` and zipped; the
/// surplus of the larger arm stays unpaired.
pub fn form_matched_pairs<O, R: Rng + ?Sized>(
    cohort: &[PatientRecord<O>],
    stratified: bool,
    rng: &mut R,
) -> Result<Pairing> {
    let mut pairing = Pairing {
        pairs: Vec::new(),
        stratified,
        unpaired_treatment: 0,
        unpaired_control: 0,
        strata_without_pairs: 0,
    };
    for (stratum, members) in group_by_stratum(cohort, stratified) {
        let (mut treated, mut control): (Vec<u32>, Vec<u32>) = (Vec::new(), Vec::new());
        for &i in &members {
            match cohort[i].arm {
                Arm::Treatment => treated.push(cohort[i].id),
                Arm::Control => control.push(cohort[i].id),
            }
        }
        treated.shuffle(rng);
        control.shuffle(rng);
        let m = treated.len().min(control.len());
        if m == 0 {
            pairing.strata_without_pairs += 1;
        }
        pairing.unpaired_treatment += treated.len() - m;
        pairing.unpaired_control += control.len() - m;
        pairing
            .pairs
            .extend(treated.iter().zip(&control).map(|(&t, &c)| MatchedPair {
                treatment_id: t,
                control_id: c,
                stratum,
            }));
    }
    if pairing.pairs.is_empty() {
        return Err(Error::NoPairsFormable);
    }
    Ok(pairing)
}

/// Every (treatment, control) index pair within each group, with the group key.
pub fn cross_pair_indices<O>(
    cohort: &[PatientRecord<O>],
    stratified: bool,
) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
    group_by_stratum(cohort, stratified)
        .into_iter()
        .flat_map(move |(stratum, members)| {
            let (treated, control): (Vec<usize>, Vec<usize>) =
                members.into_iter().partition(|&i| cohort[i].arm.is_treatment());
            treated.into_iter().flat_map(move |t| {
                let control = control.clone();
                control.into_iter().map(move |c| (t, c, stratum))
            })
        })
}

/// Every treatment x control pair, within strata when `stratified`, as
/// `(treatment_id, control_id, stratum)`. Unstratified pairs carry stratum 0.
pub fn all_cross_pairs<O>(
    cohort: &[PatientRecord<O>],
    stratified: bool,
) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
    cross_pair_indices(cohort, stratified).map(move |(t, c, k)| (cohort[t].id, cohort[c].id, k))
}
