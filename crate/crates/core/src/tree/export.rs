use std::fmt::Write;

use serde::Serialize;

use super::TruncatedTree;
use crate::metric::PointSubset;
use crate::rational::format_rational;

#[derive(Serialize)]
pub struct TreeDump {
    pub group: String,
    pub kind: super::TreeKind,
    pub radius: u64,
    pub edge_scale: String,
    pub vertices: Vec<VertexDump>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Serialize)]
pub struct VertexDump {
    pub id: usize,
    pub label: String,
    pub apex: bool,
    pub depth: u64,
}

impl TruncatedTree {
    pub fn dump(&self) -> TreeDump {
        let mut edges = Vec::new();
        for i in 0..self.len() {
            for j in self.neighbors(i) {
                if i < j {
                    edges.push([i, j]);
                }
            }
        }
        TreeDump {
            group: self.pres.describe(),
            kind: self.kind,
            radius: self.radius,
            edge_scale: format_rational(&self.edge_scale),
            vertices: (0..self.len())
                .map(|i| VertexDump {
                    id: i,
                    label: self.label(i).to_string(),
                    apex: self.vertex(i).is_apex(),
                    depth: self.vertex(i).depth(&self.pres),
                })
                .collect(),
            edges,
        }
    }

    /// Graphviz rendering. Apices are boxes; `highlight` vertices and the
    /// edges between them are drawn in red.
    pub fn to_dot(&self, highlight: Option<&PointSubset>) -> String {
        let mut out = String::from("graph tree {\n  node [fontsize=10];\n");
        let lit = |i: usize| highlight.is_some_and(|h| h.contains(i));
        for i in 0..self.len() {
            let shape = if self.vertex(i).is_apex() { "box" } else { "point" };
            let color = if lit(i) { ", color=red" } else { "" };
            let _ = writeln!(out, "  v{i} [label=\"{}\", shape={shape}{color}];", self.label(i));
        }
        for i in 0..self.len() {
            for j in self.neighbors(i).filter(|&j| j > i) {
                let color = if lit(i) && lit(j) { " [color=red, penwidth=2]" } else { "" };
                let _ = writeln!(out, "  v{i} -- v{j}{color};");
            }
        }
        out.push_str("}\n");
        out
    }
}
