#![no_main]

use libfuzzer_sys::fuzz_target;
use ssnmf::NeighborGraph;

fuzz_target!(|data: &[u8]| {
    if let Ok(graph) = NeighborGraph::read_edge_list(data) {
        let mut out = Vec::new();
        graph.write_edge_list(&mut out).expect("write to memory");
        let again = NeighborGraph::read_edge_list(out.as_slice()).expect("written list parses");
        assert_eq!(again.node_count(), graph.node_count());
        assert_eq!(again.edge_count(), graph.edge_count());
    }
});
