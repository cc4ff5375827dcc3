//! Topological patrol map: waypoints joined by traversable edges.

use petgraph::algo::{astar, connected_components};
use petgraph::graph::{NodeIndex, UnGraph};
use petgraph::visit::EdgeRef;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::docking::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    #[default]
    Waypoint,
    Dock,
    Room,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapNode {
    pub id: String,
    pub x: f64,
    pub y: f64,
    /// Heading of the node; for the dock, the direction the landmark faces.
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub kind: NodeKind,
}

impl MapNode {
    pub fn pose(&self) -> Pose<f64> {
        Pose::new(self.x, self.y, self.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEdge {
    pub a: String,
    pub b: String,
    /// Defaults to the straight-line distance between the nodes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Defaults to the robot's patrol speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed: Option<f64>,
}

/// Plain description of a map, as written in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(rename = "node")]
    pub nodes: Vec<MapNode>,
    #[serde(rename = "edge")]
    pub edges: Vec<MapEdge>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("edge {0}-{1} needs a positive length and speed")]
    BadEdge(String, String),
    #[error("map needs exactly one dock node (found {0})")]
    Dock(usize),
    #[error("map is not connected")]
    Disconnected,
    #[error("dock must connect to at least one waypoint")]
    DockIsolated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeData {
    pub length: f64,
    pub speed: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TopoMap {
    graph: UnGraph<MapNode, EdgeData>,
    dock: NodeIndex,
}

impl TopoMap {
    pub fn from_spec(spec: &MapSpec) -> Result<Self, MapError> {
        let mut graph = UnGraph::new_undirected();
        let mut index = std::collections::BTreeMap::new();
        for n in &spec.nodes {
            if index
                .insert(n.id.clone(), graph.add_node(n.clone()))
                .is_some()
            {
                return Err(MapError::DuplicateNode(n.id.clone()));
            }
        }
        for e in &spec.edges {
            let a = *index
                .get(&e.a)
                .ok_or_else(|| MapError::UnknownNode(e.a.clone()))?;
            let b = *index
                .get(&e.b)
                .ok_or_else(|| MapError::UnknownNode(e.b.clone()))?;
            let length = e
                .length
                .unwrap_or_else(|| graph[a].pose().distance(graph[b].pose()));
            let speed_ok = e.speed.is_none_or(|s| s > 0.0 && s.is_finite());
            if !(length > 0.0 && length.is_finite()) || !speed_ok {
                return Err(MapError::BadEdge(e.a.clone(), e.b.clone()));
            }
            graph.add_edge(
                a,
                b,
                EdgeData {
                    length,
                    speed: e.speed,
                },
            );
        }
        let docks: Vec<NodeIndex> = graph
            .node_indices()
            .filter(|&i| graph[i].kind == NodeKind::Dock)
            .collect();
        if docks.len() != 1 {
            return Err(MapError::Dock(docks.len()));
        }
        if graph.node_count() > 0 && connected_components(&graph) != 1 {
            return Err(MapError::Disconnected);
        }
        let dock = docks[0];
        if !graph
            .neighbors(dock)
            .any(|n| graph[n].kind != NodeKind::Dock)
        {
            return Err(MapError::DockIsolated);
        }
        Ok(Self { graph, dock })
    }

    /// Hallway loop of twelve patrol nodes with a cross corridor, a side room and the dock.
    pub fn default_spec() -> MapSpec {
        let w = |id: &str, x: f64, y: f64| MapNode {
            id: id.into(),
            x,
            y,
            theta: 0.0,
            kind: NodeKind::Waypoint,
        };
        let nodes = vec![
            w("w01", 0.0, 0.0),
            w("w02", 15.0, 0.0),
            w("w03", 30.0, 0.0),
            w("w04", 45.0, 0.0),
            w("w05", 60.0, 0.0),
            w("w06", 60.0, 20.0),
            w("w07", 45.0, 20.0),
            w("w08", 30.0, 20.0),
            w("w09", 15.0, 20.0),
            w("w10", 0.0, 20.0),
            w("w11", 30.0, 10.0),
            MapNode {
                kind: NodeKind::Room,
                ..w("room", 68.0, 20.0)
            },
            MapNode {
                id: "dock".into(),
                x: -1.5,
                y: 0.0,
                theta: 0.0,
                kind: NodeKind::Dock,
            },
        ];
        let pairs = [
            ("w01", "w02"),
            ("w02", "w03"),
            ("w03", "w04"),
            ("w04", "w05"),
            ("w05", "w06"),
            ("w06", "w07"),
            ("w07", "w08"),
            ("w08", "w09"),
            ("w09", "w10"),
            ("w10", "w01"),
            ("w03", "w11"),
            ("w11", "w08"),
            ("w06", "room"),
            ("w01", "dock"),
        ];
        MapSpec {
            nodes,
            edges: pairs
                .iter()
                .map(|(a, b)| MapEdge {
                    a: a.to_string(),
                    b: b.to_string(),
                    length: None,
                    speed: None,
                })
                .collect(),
        }
    }

    pub fn default_map() -> Self {
        Self::from_spec(&Self::default_spec()).expect("builtin map is valid")
    }

    pub fn node(&self, i: NodeIndex) -> &MapNode {
        &self.graph[i]
    }

    pub fn find(&self, id: &str) -> Option<NodeIndex> {
        self.graph.node_indices().find(|&i| self.graph[i].id == id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        self.graph.node_indices()
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn dock(&self) -> NodeIndex {
        self.dock
    }

    /// Patrol node the dock hangs off (the first non-dock neighbour).
    pub fn dock_approach(&self) -> NodeIndex {
        let mut n: Vec<NodeIndex> = self.graph.neighbors(self.dock).collect();
        n.sort();
        n[0]
    }

    pub fn edge(&self, a: NodeIndex, b: NodeIndex) -> Option<EdgeData> {
        self.graph.find_edge(a, b).map(|e| self.graph[e])
    }

    /// Patrol neighbours of `n`, sorted for determinism. The dock is never a patrol target.
    pub fn patrol_neighbors(&self, n: NodeIndex) -> Vec<NodeIndex> {
        let mut v: Vec<NodeIndex> = self
            .graph
            .neighbors(n)
            .filter(|&m| self.graph[m].kind != NodeKind::Dock)
            .collect();
        v.sort();
        v.dedup();
        v
    }

    /// Shortest route from `from` to `to`, both ends included.
    pub fn route(&self, from: NodeIndex, to: NodeIndex) -> Option<Vec<NodeIndex>> {
        astar(
            &self.graph,
            from,
            |n| n == to,
            |e| e.weight().length,
            |_| 0.0,
        )
        .map(|(_, path)| path)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeIndex, NodeIndex, EdgeData)> + '_ {
        self.graph
            .edge_references()
            .map(|e| (e.source(), e.target(), *e.weight()))
    }
}

/// Uniform choice among the patrol neighbours of `current`, excluding the node
/// just departed unless it is the only option.
pub fn next_waypoint<R: Rng + ?Sized>(
    map: &TopoMap,
    current: NodeIndex,
    previous: Option<NodeIndex>,
    rng: &mut R,
) -> NodeIndex {
    let all = map.patrol_neighbors(current);
    assert!(
        !all.is_empty(),
        "node `{}` has no patrol neighbour",
        map.node(current).id
    );
    let allowed: Vec<NodeIndex> = all
        .iter()
        .copied()
        .filter(|&n| Some(n) != previous)
        .collect();
    let pool = if allowed.is_empty() { &all } else { &allowed };
    pool[rng.random_range(0..pool.len())]
}
