mod common;

use ideaforge_core::kg::{ExportFormat, KnowledgeGraph};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::random_graph;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn snapshot_round_trip(seed in any::<u64>()) {
        let g = random_graph(&mut StdRng::seed_from_u64(seed));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.json");
        g.snapshot_save(&path).unwrap();
        let back = KnowledgeGraph::snapshot_load(&path).unwrap();
        prop_assert_eq!(back.to_snapshot(), g.to_snapshot());
        back.check_integrity().unwrap();
    }

    #[test]
    fn json_export_parses_back(seed in any::<u64>()) {
        let g = random_graph(&mut StdRng::seed_from_u64(seed));
        let doc = serde_json::from_str(&g.export(ExportFormat::Json)).unwrap();
        let back = KnowledgeGraph::from_document(doc).unwrap();
        prop_assert_eq!(back.to_document(), g.to_document());
    }

    #[test]
    fn summary_matches_enumeration(seed in any::<u64>()) {
        let g = random_graph(&mut StdRng::seed_from_u64(seed));
        let s = g.summary();
        prop_assert_eq!(s.total_nodes, g.nodes().count());
        prop_assert_eq!(s.total_edges, g.edges().count());
        prop_assert_eq!(s.node_counts.values().sum::<usize>(), s.total_nodes);
        prop_assert_eq!(s.edge_counts.values().sum::<usize>(), s.total_edges);
    }
}
