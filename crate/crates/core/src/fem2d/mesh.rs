use crate::error::{Result, SgError};

/// Axis-aligned rectangle `[x_lo, x_hi] x [y_lo, y_hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Domain {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        Self { x_lo, x_hi, y_lo, y_hi }
    }

    /// `[-0.5, 0.5]^2`.
    pub fn centered_unit() -> Self {
        Self::new(-0.5, 0.5, -0.5, 0.5)
    }

    pub fn unit() -> Self {
        Self::new(0.0, 1.0, 0.0, 1.0)
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// Uniform tensor grid of bilinear quadrilaterals.
///
/// Nodes are numbered row by row, `node = iy * (nx + 1) + ix`. Element nodes
/// run counter-clockwise from the lower-left corner. Every boundary node is a
/// Dirichlet node; the remaining nodes carry the unknowns, numbered in the
/// same row-major order.
#[derive(Clone, Debug)]
pub struct Mesh {
    nx: usize,
    ny: usize,
    domain: Domain,
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    boundary_nodes: Vec<usize>,
    dof_of_node: Vec<Option<usize>>,
    interior_nodes: Vec<usize>,
}

impl Mesh {
    pub fn new(nx: usize, ny: usize, domain: Domain) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(SgError::InvalidArgument(format!("mesh needs at least 2x2 cells, got {nx}x{ny}")));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(SgError::InvalidArgument("domain must have positive extent".into()));
        }
        let hx = domain.width() / nx as f64;
        let hy = domain.height() / ny as f64;
        let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut boundary_nodes = Vec::new();
        let mut dof_of_node = Vec::with_capacity((nx + 1) * (ny + 1));
        let mut interior_nodes = Vec::new();
        for iy in 0..=ny {
            for ix in 0..=nx {
                let id = nodes.len();
                // Pin the far edges exactly to the domain bounds.
                let x = if ix == nx { domain.x_hi } else { domain.x_lo + ix as f64 * hx };
                let y = if iy == ny { domain.y_hi } else { domain.y_lo + iy as f64 * hy };
                nodes.push([x, y]);
                if ix == 0 || iy == 0 || ix == nx || iy == ny {
                    boundary_nodes.push(id);
                    dof_of_node.push(None);
                } else {
                    dof_of_node.push(Some(interior_nodes.len()));
                    interior_nodes.push(id);
                }
            }
        }
        let mut elements = Vec::with_capacity(nx * ny);
        for ey in 0..ny {
            for ex in 0..nx {
                let n0 = ey * (nx + 1) + ex;
                elements.push([n0, n0 + 1, n0 + nx + 2, n0 + nx + 1]);
            }
        }
        Ok(Self { nx, ny, domain, nodes, elements, boundary_nodes, dof_of_node, interior_nodes })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn hx(&self) -> f64 {
        self.domain.width() / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.domain.height() / self.ny as f64
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Mesh nodes carrying unknowns, in dof order.
    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior_nodes
    }

    /// Number of unknowns `N_x`.
    pub fn n_dofs(&self) -> usize {
        self.interior_nodes.len()
    }

    pub fn dof(&self, node: usize) -> Option<usize> {
        self.dof_of_node[node]
    }

    pub fn node_index(&self, ix: usize, iy: usize) -> usize {
        iy * (self.nx + 1) + ix
    }

    /// Signed area of an element by the shoelace formula.
    pub fn element_area(&self, e: usize) -> f64 {
        let n = self.elements[e];
        let mut twice = 0.0;
        for a in 0..4 {
            let p = self.nodes[n[a]];
            let q = self.nodes[n[(a + 1) % 4]];
            twice += p[0] * q[1] - q[0] * p[1];
        }
        0.5 * twice
    }

    /// Scatter interior values into a full nodal vector (zero on the boundary).
    pub fn expand_interior(&self, interior: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_nodes()];
        for (dof, &node) in self.interior_nodes.iter().enumerate() {
            full[node] = interior[dof];
        }
        full
    }
}

/// Free-function form of [`Mesh::new`].
pub fn build_mesh(nx: usize, ny: usize, domain: Domain) -> Result<Mesh> {
    Mesh::new(nx, ny, domain)
}
