//! Fact-to-step linking by shared entity.

use std::collections::{BTreeMap, HashMap};

use crate::model::{CuratedFact, Entity, StepRef, Task};

/// Links each fact to every step that lists its entity. Sets
/// `linked_step_ids` on every fact (empty when nothing matches) and returns
/// the per-step fact lists, best fact first.
pub fn link_facts_to_steps(
    facts: &mut [CuratedFact],
    corpus: &[Task],
) -> BTreeMap<StepRef, Vec<String>> {
    let mut steps_by_entity: HashMap<&Entity, Vec<StepRef>> = HashMap::new();
    for task in corpus {
        for step in &task.steps {
            for entity in &step.entities {
                let refs = steps_by_entity.entry(entity).or_default();
                let r = task.step_ref(step.index);
                // a step may list the same entity twice
                if refs.last() != Some(&r) {
                    refs.push(r);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..facts.len()).collect();
    order.sort_by(|&a, &b| CuratedFact::rank_cmp(&facts[a], &facts[b]));

    let mut links: BTreeMap<StepRef, Vec<String>> = BTreeMap::new();
    for idx in order {
        let fact = &mut facts[idx];
        fact.linked_step_ids = steps_by_entity
            .get(&fact.entity)
            .cloned()
            .unwrap_or_default();
        for step in &fact.linked_step_ids {
            links.entry(step.clone()).or_default().push(fact.id.clone());
        }
    }
    links
}
