//! Per-language gap selection.
//!
//! At most `cap` gaps are kept per language. When a language has more gaps
//! than that, the cap is apportioned over the target article's sections by
//! the largest-remainder method and each section contributes its earliest
//! gaps in document order.

use std::collections::BTreeMap;

use indexmap::IndexMap;
use num_traits::Float;
use thiserror::Error;

use crate::align::GapFact;

/// Facts shown per language by default.
pub const DEFAULT_CAP: usize = 10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SelectError {
    #[error("quota plan does not fit the inventory: {0}")]
    PlanMismatch(String),
    #[error("inventory for {language} belongs to {found:?}, expected {expected:?}")]
    TopicMismatch {
        language: String,
        expected: String,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapInventory<S> {
    pub language_code: String,
    pub topic: String,
    pub gaps: Vec<GapFact<S>>,
    pub section_counts: BTreeMap<usize, usize>,
}

impl<S: Float> GapInventory<S> {
    pub fn new(
        language_code: impl Into<String>,
        topic: impl Into<String>,
        gaps: Vec<GapFact<S>>,
    ) -> Self {
        let section_counts = count_gaps_by_section(&gaps);
        Self {
            language_code: language_code.into(),
            topic: topic.into(),
            gaps,
            section_counts,
        }
    }

    pub fn total(&self) -> usize {
        self.gaps.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotaPlan {
    pub cap: usize,
    pub per_section: BTreeMap<usize, usize>,
}

impl QuotaPlan {
    pub fn total(&self) -> usize {
        self.per_section.values().sum()
    }
}

pub fn count_gaps_by_section<S>(gaps: &[GapFact<S>]) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for g in gaps {
        *counts.entry(g.fact.section_index).or_insert(0) += 1;
    }
    counts
}

/// Largest-remainder apportionment of `cap` over `section_counts`.
///
/// When the total does not exceed `cap` every gap is kept. Otherwise each
/// section gets the floor of its exact quota `count * cap / total`, and the
/// leftover units go to the largest remainders; ties prefer the larger
/// count, then the lower section index. All arithmetic is exact.
pub fn allocate_quota(section_counts: &BTreeMap<usize, usize>, cap: usize) -> QuotaPlan {
    let total: usize = section_counts.values().sum();
    if total <= cap {
        return QuotaPlan {
            cap,
            per_section: section_counts.clone(),
        };
    }
    let (cap_w, total_w) = (cap as u128, total as u128);
    let mut per_section = BTreeMap::new();
    // (remainder numerator over `total`, count, section)
    let mut remainders = Vec::with_capacity(section_counts.len());
    let mut assigned = 0usize;
    for (&section, &count) in section_counts {
        let scaled = count as u128 * cap_w;
        let floor = (scaled / total_w) as usize;
        per_section.insert(section, floor);
        remainders.push((scaled % total_w, count, section));
        assigned += floor;
    }
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)).then(a.2.cmp(&b.2)));
    for &(_, _, section) in remainders.iter().take(cap - assigned) {
        *per_section.get_mut(&section).expect("section present") += 1;
    }
    QuotaPlan { cap, per_section }
}

fn check_plan<S>(inventory: &GapInventory<S>, plan: &QuotaPlan) -> Result<(), SelectError> {
    let counts = count_gaps_by_section(&inventory.gaps);
    if counts != inventory.section_counts {
        return Err(SelectError::PlanMismatch(
            "inventory section counts are stale".into(),
        ));
    }
    let expected = plan.cap.min(inventory.gaps.len());
    if plan.total() != expected {
        return Err(SelectError::PlanMismatch(format!(
            "quotas sum to {}, expected {expected}",
            plan.total()
        )));
    }
    for (section, &quota) in &plan.per_section {
        let available = counts.get(section).copied().unwrap_or(0);
        if quota > available {
            return Err(SelectError::PlanMismatch(format!(
                "section {section} quota {quota} exceeds its {available} gaps"
            )));
        }
    }
    Ok(())
}

/// Takes the first quota-many gaps of each section in document order
/// (paragraph, then decomposition ordinal); output is in document order.
pub fn select_facts<S: Clone>(
    inventory: &GapInventory<S>,
    plan: &QuotaPlan,
) -> Result<Vec<GapFact<S>>, SelectError> {
    check_plan(inventory, plan)?;
    let mut ordered: Vec<&GapFact<S>> = inventory.gaps.iter().collect();
    ordered.sort_by_key(|g| (g.fact.paragraph_index, g.fact.ordinal));
    let mut remaining = plan.per_section.clone();
    Ok(ordered
        .into_iter()
        .filter(|g| match remaining.get_mut(&g.fact.section_index) {
            Some(left) if *left > 0 => {
                *left -= 1;
                true
            }
            _ => false,
        })
        .cloned()
        .collect())
}

/// Independent selection per language; input language order is kept.
pub fn select_for_topic<S: Float>(
    inventories: &IndexMap<String, GapInventory<S>>,
    cap: usize,
) -> Result<IndexMap<String, Vec<GapFact<S>>>, SelectError> {
    let mut out = IndexMap::new();
    let topic = inventories.values().next().map(|i| i.topic.clone());
    for (language, inventory) in inventories {
        if let Some(expected) = &topic {
            if &inventory.topic != expected {
                return Err(SelectError::TopicMismatch {
                    language: language.clone(),
                    expected: expected.clone(),
                    found: inventory.topic.clone(),
                });
            }
        }
        let plan = allocate_quota(&inventory.section_counts, cap);
        out.insert(language.clone(), select_facts(inventory, &plan)?);
    }
    Ok(out)
}
