//! Hand-transcribed closed-form tables for the three structures.
//!
//! These are written out term by term, block by block, and are deliberately
//! not computed from [`crate::structures::make_structure`]: the verification
//! catalog compares the derived objects against them.
//!
//! Blocks are numbered 0..=7 for `x_i, x_{n+i}, ..., x_{7n+i}`.

use crate::structures::StructureId;

/// `J(∂/∂x_{bn+i}) = sign · ∂/∂x_{tn+i}`, one `(t, sign)` per source block `b`.
pub fn tangent_table(id: StructureId) -> [(u8, i8); 8] {
    match id {
        StructureId::J1 => [(1, 1), (0, -1), (4, 1), (5, 1), (2, -1), (3, -1), (7, 1), (6, -1)],
        StructureId::J2 => [(2, 1), (4, -1), (0, -1), (6, 1), (1, 1), (7, -1), (3, -1), (5, 1)],
        StructureId::J3 => [(3, 1), (5, -1), (6, -1), (0, -1), (7, 1), (1, 1), (2, 1), (4, -1)],
    }
}

/// `J*(dx_{bn+i}) = sign · dx_{tn+i}`.
pub fn cotangent_table(id: StructureId) -> [(u8, i8); 8] {
    match id {
        StructureId::J1 => [(1, 1), (0, -1), (4, 1), (5, 1), (2, -1), (3, -1), (7, 1), (6, -1)],
        StructureId::J2 => [(2, 1), (4, -1), (0, -1), (6, 1), (1, 1), (7, -1), (3, -1), (5, 1)],
        StructureId::J3 => [(3, 1), (5, -1), (6, -1), (0, -1), (7, 1), (1, 1), (2, 1), (4, -1)],
    }
}

/// Terms `sign · ½ · x_{xb·n+i} dx_{db·n+i}` of the Liouville form, as
/// `(sign, xb, db)`.
pub fn liouville_terms(id: StructureId) -> [(i8, u8, u8); 8] {
    match id {
        StructureId::J1 => [
            (1, 0, 1), (-1, 1, 0), (1, 2, 4), (1, 3, 5),
            (-1, 4, 2), (-1, 5, 3), (1, 6, 7), (-1, 7, 6),
        ],
        StructureId::J2 => [
            (1, 0, 2), (-1, 1, 4), (-1, 2, 0), (1, 3, 6),
            (1, 4, 1), (-1, 5, 7), (-1, 6, 3), (1, 7, 5),
        ],
        StructureId::J3 => [
            (1, 0, 3), (-1, 1, 5), (-1, 2, 6), (-1, 3, 0),
            (1, 4, 7), (1, 5, 1), (1, 6, 2), (-1, 7, 4),
        ],
    }
}

/// Terms `+1 · dx_{an+i} ∧ dx_{bn+i}` of the symplectic form, as `(a, b)`.
pub fn symplectic_terms(id: StructureId) -> [(u8, u8); 4] {
    match id {
        StructureId::J1 => [(1, 0), (4, 2), (5, 3), (7, 6)],
        StructureId::J2 => [(1, 4), (2, 0), (5, 7), (6, 3)],
        StructureId::J3 => [(3, 0), (1, 5), (2, 6), (7, 4)],
    }
}

/// Hamilton equations `dx_{tn+i}/dt = sign · ∂H/∂x_{sn+i}` as `(t, sign, s)`.
pub fn hamilton_equations(id: StructureId) -> [(u8, i8, u8); 8] {
    match id {
        StructureId::J1 => [
            (0, -1, 1), (1, 1, 0), (2, -1, 4), (3, -1, 5),
            (4, 1, 2), (5, 1, 3), (6, -1, 7), (7, 1, 6),
        ],
        StructureId::J2 => [
            (0, -1, 2), (1, 1, 4), (2, 1, 0), (3, -1, 6),
            (4, -1, 1), (5, 1, 7), (6, 1, 3), (7, -1, 5),
        ],
        StructureId::J3 => [
            (0, -1, 3), (1, 1, 5), (2, 1, 6), (3, 1, 0),
            (4, -1, 7), (5, -1, 1), (6, -1, 2), (7, 1, 4),
        ],
    }
}
