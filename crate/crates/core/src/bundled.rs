//! Data shipped with the crate: the reference registry of 107 tasks, its
//! size overlay for collection members, and the family transfer table.

use crate::analytics::TransferMatrix;
use crate::registry::{Family, Registry, SizeOverlay};

pub const REFERENCE_REGISTRY_TSV: &str = include_str!("../data/reference_registry.tsv");
pub const REFERENCE_SIZES_TSV: &str = include_str!("../data/reference_sizes.tsv");
pub const TRANSFER_TABLE_TSV: &str = include_str!("../data/transfer_table.tsv");

/// Three representative tasks per family used by the pairwise transfer study.
pub const REPRESENTATIVE_TASKS: [(Family, [&str; 3]); 8] = [
    (Family::Sum, ["cnn_dailymail", "xsum", "wiki_lingua"]),
    (
        Family::Dlg,
        ["schema_guided_dialogue", "wizard_of_wikipedia", "dialoglue_top"],
    ),
    (Family::Nli, ["anli", "mnli", "alpha_nli"]),
    (Family::Cls, ["imdb_reviews", "goemotions", "civil_comments"]),
    (Family::Sem, ["atis_funql", "geo_funql", "cogs"]),
    (Family::Cmns, ["piqa", "socialiqa", "winogrande"]),
    (Family::Cbqa, ["natural_questions", "triviaqa", "hotpotqa"]),
    (Family::Rc, ["squad", "boolq", "tweetqa"]),
];

/// The eight families of the transfer study, in table order.
pub const TRANSFER_FAMILIES: [Family; 8] = [
    Family::Sum,
    Family::Dlg,
    Family::Nli,
    Family::Cls,
    Family::Sem,
    Family::Cmns,
    Family::Cbqa,
    Family::Rc,
];

pub fn reference_overlay() -> SizeOverlay {
    SizeOverlay::from_tsv(REFERENCE_SIZES_TSV).expect("bundled overlay parses")
}

/// The full reference registry with every size resolved.
pub fn reference_registry() -> Registry {
    Registry::from_tsv(REFERENCE_REGISTRY_TSV, Some(&reference_overlay())).expect("bundled registry parses")
}

/// The 24 representative tasks, in registry order.
pub fn representative_registry() -> Registry {
    reference_registry().retain(|t| {
        REPRESENTATIVE_TASKS
            .iter()
            .any(|(_, names)| names.contains(&t.name.as_str()))
    })
}

pub fn reference_transfer_matrix() -> TransferMatrix {
    TransferMatrix::from_tsv(TRANSFER_TABLE_TSV).expect("bundled transfer table parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representative_tasks_match_their_family() {
        let reg = reference_registry();
        for (fam, names) in REPRESENTATIVE_TASKS {
            for n in names {
                assert_eq!(reg.get(n).unwrap_or_else(|| panic!("{n}")).family, fam, "{n}");
            }
        }
        assert_eq!(representative_registry().len(), 24);
    }

    #[test]
    fn transfer_matrix_covers_the_study_families() {
        assert_eq!(reference_transfer_matrix().families(), &TRANSFER_FAMILIES);
    }
}
