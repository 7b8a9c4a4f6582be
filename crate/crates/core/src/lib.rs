//! Local harmonic analysis for the torus and Kuznetsov relative trace formulas of `PGL2`
//! over `Q_p`: Schwartz-Bruhat functions, the transform `|.| G = |.| F iota F`, orbital
//! integrals, Hecke operators, and dual-path verification of the matching theorem and
//! the fundamental lemma.

pub mod bruhat;
pub mod error;
pub mod field;
pub mod group;
pub mod orbital;
pub mod padic;
pub mod ratfn;
pub mod singular;
pub mod tate;

pub use bruhat::{BruhatFn, BruhatFn2, Coset, Domain2};
pub use error::{Error, Result};
pub use field::{eta_eval, is_norm, norm_e, EElem, ExtKind, LocalFieldCtx, MeasureConstants, QuadExtData};
pub use num_complex::Complex64;
pub use padic::{psi_eval, PadicScalar};
pub use ratfn::RationalFnT;
pub use tate::{gamma_factor, gamma_star_eta, tate_zeta, MellinCharacter};
pub use singular::{Germ, KlTail, SWElem, SXElem, SZElem, WGerm};
pub use group::{cs_action, double_coset_reps, hecke_mul, iwasawa_decompose, satake_transform, GroupElt, HeckeElt, KSection};
pub use orbital::{
    basic_fw0, basic_fz0, hecke_apply_w, hecke_apply_z, kloosterman, o_baby_nonsplit, o_baby_split, o_kuz_closed, o_kuz_direct,
    o_torus_group, sz_from_charts, torus_pair_invariant, verify_fl, verify_matching, whittaker_unfolding_check, BabyInput, FLReport,
    MatchingReport, TorusPairDescriptor,
};
