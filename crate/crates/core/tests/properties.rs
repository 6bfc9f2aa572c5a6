use std::collections::{BTreeMap, HashMap, HashSet};

use gapforge_core::align::{classify_article_pair, AlignmentStatus, GapFact, NeighborSet};
use gapforge_core::corpus::{bundled_fixture, Article, Corpus, Paragraph, Section};
use gapforge_core::decompose::{decompose_article, fact_id, AtomicFact};
use gapforge_core::enrich::{decode_highlight_link, enrich_selection};
use gapforge_core::gapselect::{allocate_quota, select_facts, select_for_topic, GapInventory};
use gapforge_core::provider::{InFlight, MockChat, MockEmbedder};
use indexmap::IndexMap;
use proptest::prelude::*;

const POOL: &[&str] = &[
    "The duck is roasted in a closed oven.",
    "Its skin is thin and crisp.",
    "Dr. Wang opened the first shop in 1864.",
    "The dish costs 3.5 yuan per slice.",
    "Guests wrap the meat in pancakes.",
    "Spring onions and cucumber are served alongside.",
    "A sweet bean sauce is brushed on the pancake.",
    "Some restaurants carve the duck at the table.",
    "The recipe spread to other cities.",
    "It was served at state banquets.",
    "Fruit-tree wood gives the meat its aroma.",
    "Chefs inflate the skin before drying it.",
];

fn article(lang: &str, sentences: &[usize], split: usize) -> Article {
    let split = split.clamp(1, 4);
    let paragraphs: Vec<Paragraph> = sentences
        .chunks(split)
        .enumerate()
        .map(|(i, chunk)| {
            let text = chunk.iter().map(|&s| POOL[s]).collect::<Vec<_>>().join(" ");
            Paragraph::new(i, i % 3, text, lang)
        })
        .collect();
    Article {
        language_code: lang.into(),
        title: "Topic".into(),
        revision_id: "7".into(),
        canonical_url: format!("https://{lang}.wikipedia.org/wiki/Topic"),
        sections: (0..3)
            .map(|i| Section {
                index: i,
                heading: if i == 0 {
                    String::new()
                } else {
                    format!("S{i}")
                },
                level: if i == 0 { 1 } else { 2 },
            })
            .collect(),
        paragraphs,
    }
}

fn sentences() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..POOL.len(), 0..16)
}

type Decomposed = (Article, Vec<AtomicFact>);

fn fixture_facts() -> (Article, Vec<AtomicFact>, HashMap<String, Decomposed>) {
    let corpus = Corpus::new(bundled_fixture(), ["en", "fr", "ru", "zh"]);
    let in_flight = InFlight::new(2);
    let english = corpus.fetch_article("Peking duck", "en").unwrap();
    let english_facts = decompose_article(&english, &MockChat, &in_flight).unwrap();
    let mut targets = HashMap::new();
    for lang in ["fr", "ru", "zh"] {
        let title = corpus
            .resolve_interlanguage("Peking duck", "en", lang)
            .unwrap();
        let a = corpus.fetch_article(&title, lang).unwrap();
        let f = decompose_article(&a, &MockChat, &in_flight).unwrap();
        targets.insert(lang.to_string(), (a, f));
    }
    (english, english_facts, targets)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fact_ids_are_injective(
        a in ("[a-z]{2}", 0usize..50, 0usize..50, ".{0,20}"),
        b in ("[a-z]{2}", 0usize..50, 0usize..50, ".{0,20}"),
    ) {
        let id = |t: &(String, usize, usize, String)| fact_id(&t.0, t.1, t.2, &t.3);
        prop_assert_eq!(a == b, id(&a) == id(&b));
    }

    #[test]
    fn mock_facts_come_from_their_paragraph(s in sentences(), split in 1usize..5, lang in "(en|fr|ru)") {
        let article = article(&lang, &s, split);
        let facts = decompose_article(&article, &MockChat, &InFlight::new(2)).unwrap();
        prop_assert_eq!(facts.len(), article.sentence_count());
        for f in &facts {
            let p = article.paragraph(f.paragraph_index).unwrap();
            prop_assert!(p.text.contains(&f.text));
            prop_assert_eq!(p.section_index, f.section_index);
        }
        let again = decompose_article(&article, &MockChat, &InFlight::new(3)).unwrap();
        prop_assert_eq!(facts, again);
    }

    #[test]
    fn alignment_invariants(src in sentences(), tgt in sentences(), k in 1usize..5) {
        let in_flight = InFlight::new(3);
        let embedder: MockEmbedder<f64> = MockEmbedder::default();
        let source = decompose_article(&article("en", &src, 2), &MockChat, &in_flight).unwrap();
        let target = decompose_article(&article("fr", &tgt, 3), &MockChat, &in_flight).unwrap();
        let result = classify_article_pair(&source, &target, &MockChat, &embedder, k, &in_flight).unwrap();

        prop_assert_eq!(result.aligned.len() + result.gaps.len(), target.len());
        let aligned: HashSet<_> = result.aligned.iter().map(|(f, _)| f.id.clone()).collect();
        prop_assert!(result.gaps.iter().all(|g| !aligned.contains(&g.fact.id)));

        let sets = result.aligned.iter().map(|(_, v)| &v.neighbor_set).chain(result.gaps.iter().map(|g| &g.neighbors));
        for set in sets {
            prop_assert!(set.neighbors.len() <= k.min(source.len()));
            prop_assert!(set.neighbors.windows(2).all(|w| w[0].cosine >= w[1].cosine));
        }
        for (_, verdict) in &result.aligned {
            match &verdict.status {
                AlignmentStatus::Aligned { source_fact_id } => prop_assert!(verdict.neighbor_set.contains(source_fact_id)),
                AlignmentStatus::Gap => prop_assert!(false, "gap verdict among aligned facts"),
            }
        }
        for (f, _) in &result.aligned {
            prop_assert!(source.iter().any(|s| s.text.contains(&f.text) || f.text.contains(&s.text)));
        }
        for g in &result.gaps {
            prop_assert!(source.iter().all(|s| s.text != g.fact.text), "verbatim copy {:?} left as gap", g.fact.text);
        }
        let again = classify_article_pair(&source, &target, &MockChat, &embedder, k, &InFlight::new(1)).unwrap();
        prop_assert_eq!(result, again);
    }

    #[test]
    fn selection_is_a_per_section_prefix(
        sections in prop::collection::vec(0usize..5, 0..60),
        cap in 0usize..25,
    ) {
        let gaps: Vec<GapFact<f64>> = sections
            .iter()
            .enumerate()
            .map(|(i, &section)| GapFact {
                fact: AtomicFact {
                    id: format!("fr-{i}"),
                    text: format!("f{i}"),
                    language_code: "fr".into(),
                    paragraph_index: i / 2,
                    section_index: section,
                    ordinal: i % 2,
                    source_sentence_index: None,
                },
                neighbors: NeighborSet::empty(format!("fr-{i}")),
            })
            .collect();
        let inventory = GapInventory::new("fr", "Topic", gaps.clone());
        let plan = allocate_quota(&inventory.section_counts, cap);
        let selected = select_facts(&inventory, &plan).unwrap();
        prop_assert_eq!(selected.len(), cap.min(gaps.len()));

        let mut by_section: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for g in &gaps {
            by_section.entry(g.fact.section_index).or_default().push(&g.fact.id);
        }
        for (section, ids) in by_section {
            let picked: Vec<&str> = selected.iter().filter(|g| g.fact.section_index == section).map(|g| g.fact.id.as_str()).collect();
            prop_assert_eq!(&ids[..picked.len()], &picked[..]);
        }
        prop_assert_eq!(select_facts(&inventory, &plan).unwrap(), selected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn enrichment_invariants_on_fixture(cap in 0usize..20, k in 1usize..5) {
        let (english, english_facts, targets) = fixture_facts();
        let in_flight = InFlight::new(4);
        let embedder: MockEmbedder<f64> = MockEmbedder::default();
        let mut inventories = IndexMap::new();
        for lang in ["fr", "ru", "zh"] {
            let (_, facts) = &targets[lang];
            let result = classify_article_pair(&english_facts, facts, &MockChat, &embedder, k, &in_flight).unwrap();
            inventories.insert(lang.to_string(), GapInventory::new(lang, "Peking duck", result.gaps));
        }
        let selected = select_for_topic(&inventories, cap).unwrap();
        let articles: HashMap<String, Article> = targets.iter().map(|(l, (a, _))| (l.clone(), a.clone())).collect();
        let presented = enrich_selection(&selected, &english, &english_facts, &articles, &MockChat, &embedder, &in_flight).unwrap();

        prop_assert_eq!(presented.keys().collect::<Vec<_>>(), selected.keys().collect::<Vec<_>>());
        for (lang, gaps) in &selected {
            let facts = &presented[lang];
            prop_assert_eq!(facts.len(), gaps.len());
            prop_assert!(facts.len() <= cap);
            let source = &articles[lang];
            for (p, g) in facts.iter().zip(gaps) {
                prop_assert_eq!(&p.id, &g.fact.id);
                let linked = decode_highlight_link(&p.source_link_url).unwrap();
                prop_assert!(source.paragraphs.iter().any(|para| para.text.contains(&linked)));
                let para = english.paragraph(p.anchor_paragraph_index).unwrap();
                prop_assert!(para.sentences.iter().any(|s| s.text == p.anchor_sentence_en));
            }
        }
    }
}
