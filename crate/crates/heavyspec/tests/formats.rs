use heavyspec::formats::*;
use heavyspec::report::{Cell, Table};
use heavyspec_core::expander::{expose_ports, sample_wiring, ClusterWiring};
use heavyspec_core::homogenization::{assemble_network, BlockModel};
use heavyspec_core::inverse::{pad_targets, prescribe_complete_graph, SpectralTarget, WeightSolution};
use heavyspec_core::topology::{walecki_decomposition, SurfaceModel};
use heavyspec_core::{GraphBuilder, MeasuredGraph};
use proptest::prelude::*;

fn positive() -> impl Strategy<Value = f64> {
    prop_oneof![1e-300..1e300f64, 1e-3..1e3f64, Just(f64::MIN_POSITIVE), Just(f64::MAX)]
}

fn graph_strategy() -> impl Strategy<Value = MeasuredGraph> {
    (1usize..12).prop_flat_map(|n| {
        (
            proptest::collection::vec(positive(), n),
            proptest::collection::vec((0..n, 0..n, positive(), proptest::option::of(0u32..4)), 0..30),
        )
            .prop_map(|(measures, edges)| {
                let mut b = GraphBuilder::new(measures);
                for (u, v, w, c) in edges {
                    // Keeps merged parallel weights finite.
                    if w < 1e300 {
                        let _ = match c {
                            Some(c) => b.add_colored_edge(u, v, w, c),
                            None => b.add_edge(u, v, w),
                        };
                    }
                }
                b.build()
            })
            .prop_map(Result::unwrap)
    })
}

proptest! {
    #[test]
    fn text_round_trip_is_bit_exact(g in graph_strategy()) {
        let text = graph_to_text(&g);
        let back = graph_from_text(&text).unwrap();
        for (a, b) in g.measures().iter().zip(back.measures()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in g.edges().iter().zip(back.edges()) {
            prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
            prop_assert_eq!((a.u, a.v, a.color), (b.u, b.v, b.color));
        }
        prop_assert_eq!(graph_to_text(&back), text);
    }

    #[test]
    fn json_round_trip_is_bit_exact(g in graph_strategy()) {
        let back: MeasuredGraph = serde_json::from_str(&to_json(&g).unwrap()).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(graph_to_text(&back), graph_to_text(&g));
    }

    #[test]
    fn text_and_json_agree(g in graph_strategy()) {
        let via_text = graph_from_text(&graph_to_text(&g)).unwrap();
        let via_json: MeasuredGraph = serde_json::from_str(&to_json(&g).unwrap()).unwrap();
        prop_assert_eq!(via_text, via_json);
    }
}

fn solution() -> WeightSolution {
    let t = SpectralTarget::new(vec![1.0, 3.0], 0.1, 5).unwrap();
    prescribe_complete_graph(5, 1.0, &pad_targets(&t, 1.0).unwrap(), 1e-10, 4).unwrap()
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ws = solution();
    let g = ws.to_graph().unwrap();
    for name in ["g.graph", "g.json"] {
        let p = dir.path().join(name);
        write_graph(&p, &g).unwrap();
        assert_eq!(read_graph(&p).unwrap(), g);
    }
    let p = dir.path().join("w.json");
    write_json(&p, &ws).unwrap();
    let back = read_weights(&p).unwrap();
    assert_eq!(back, ws);
    for (a, b) in back.weights.iter().zip(&ws.weights) {
        assert_eq!(a.weight.to_bits(), b.weight.to_bits());
    }
}

#[test]
fn wiring_json_round_trip() {
    let w = expose_ports(&sample_wiring(64, 2, 5, 0.5).unwrap(), 6).unwrap();
    let text = to_json(&w).unwrap();
    let back: ClusterWiring = serde_json::from_str(&text).unwrap();
    assert_eq!(back, w);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["permutations"].as_array().unwrap().len(), 2);
    assert!(v["permutations"][0][0].is_u64());
    assert_eq!(v["ports"].as_array().unwrap().len(), 2);
}

#[test]
fn network_round_trip_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let ws = solution();
    let ca = walecki_decomposition(5, 2).unwrap();
    let b = BlockModel::diamond(2, 1.0).unwrap();
    let net = assemble_network(&ws, &b, &ca, 4, 9, &Default::default()).unwrap();
    let (g, s) = (dir.path().join("net.graph"), dir.path().join("net.json"));
    write_network(&g, &s, &net).unwrap();
    let back = read_network(&g, &s).unwrap();
    assert_eq!(back, net);
    for node in 0..net.graph.vertex_count() {
        assert_eq!(back.cluster_of(node), net.cluster_of(node));
        assert_eq!(back.corridor_of(node), net.corridor_of(node));
    }
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&s).unwrap()).unwrap();
    assert_eq!(sidecar["roles"][0]["kind"], "cluster");
}

#[test]
fn sidecar_must_match_graph() {
    let dir = tempfile::tempdir().unwrap();
    let ws = solution();
    let net =
        assemble_network(&ws, &BlockModel::single_node(2, 1.0).unwrap(), &walecki_decomposition(5, 0).unwrap(), 4, 1, &Default::default())
            .unwrap();
    let (g, s) = (dir.path().join("net.graph"), dir.path().join("net.json"));
    write_network(&g, &s, &net).unwrap();
    write_graph(&g, &MeasuredGraph::complete(3, 1.0, 1.0).unwrap()).unwrap();
    assert!(read_network(&g, &s).is_err());
}

#[test]
fn coloring_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let ca = walecki_decomposition(7, 3).unwrap();
    let p = dir.path().join("c.txt");
    write_coloring(&p, &ca).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 1 + 3);
    assert_eq!(read_coloring(&p).unwrap(), ca);
}

#[test]
fn target_files() {
    let dir = tempfile::tempdir().unwrap();
    let toml_path = dir.path().join("t.toml");
    std::fs::write(&toml_path, "targets = [1.0, 3.0]\nepsilon = 0.1\nvertices = 5\n").unwrap();
    let t = read_target(&toml_path).unwrap();
    assert_eq!(t, SpectralTarget::new(vec![1.0, 3.0], 0.1, 5).unwrap());
    let json_path = dir.path().join("t.json");
    write_json(&json_path, &t).unwrap();
    assert_eq!(read_target(&json_path).unwrap(), t);
    std::fs::write(&toml_path, "targets = [3.0, 1.0]\nepsilon = 0.1\nvertices = 5\n").unwrap();
    let e = read_target(&toml_path).unwrap_err().to_string();
    assert!(e.contains("t.toml"), "{e}");
}

#[test]
fn surface_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = SurfaceModel::torus_chain(2.0, 1.0).unwrap();
    let p = dir.path().join("s.json");
    write_json(&p, &s).unwrap();
    assert_eq!(read_surface(&p).unwrap(), s);
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
    v["vertex_genera"] = serde_json::json!([1, 1]);
    std::fs::write(&p, v.to_string()).unwrap();
    assert!(read_surface(&p).is_err());
}

#[test]
fn parse_error_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.graph");
    std::fs::write(&p, "n 2\nm 1 1\ne 0 1 nope\n").unwrap();
    let e = read_graph(&p).unwrap_err().to_string();
    assert!(e.contains("bad.graph") && e.contains("line 3"), "{e}");
}

#[test]
fn table_csv_parses_back() {
    let mut t = Table::new(&["m", "x", "flag", "note"]);
    t.push(vec![4usize.into(), 0.1f64.into(), true.into(), Cell::Empty]);
    t.push(vec![8usize.into(), 1e-20f64.into(), false.into(), "a \"quoted\", text".into()]);
    let csv = t.to_csv().unwrap();
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1].parse::<f64>().unwrap(), 1e-20);
    assert_eq!(&rows[1][3], "a \"quoted\", text");
}
