//! Set propagation through networks: interval bounds and exact star sets.

use ndarray::{Array1, Zip};

use crate::error::{Error, Result};
use crate::geometry::{StarSet, StarUnion};
use crate::interval::{Interval, IntervalBox};
use crate::network::{Layer, Network};

pub const DEFAULT_SPLIT_CAP: usize = 4096;

/// Interval bound propagation in center/radius form.
pub fn ibp(net: &Network, input: &IntervalBox) -> Result<IntervalBox> {
    if input.dim() != net.in_dim() {
        return Err(Error::Dimension(format!("network expects {} inputs, box has {}", net.in_dim(), input.dim())));
    }
    let mut lo = Array1::from(input.lower());
    let mut hi = Array1::from(input.upper());
    for layer in net.layers() {
        match layer {
            Layer::Affine { w, b } => {
                let c = (&lo + &hi) * 0.5;
                let r = (&hi - &lo) * 0.5;
                let c2 = w.dot(&c) + b;
                let r2 = w.mapv(f64::abs).dot(&r);
                lo = &c2 - &r2;
                hi = &c2 + &r2;
            }
            Layer::Relu => {
                lo.mapv_inplace(|v| v.max(0.0));
                hi.mapv_inplace(|v| v.max(0.0));
            }
        }
    }
    let mut dims = Vec::with_capacity(lo.len());
    Zip::from(&lo).and(&hi).for_each(|&l, &h| dims.push(Interval::new(l, h.max(l))));
    Ok(IntervalBox::new(dims))
}

/// Exact image of a star under a ReLU network.
///
/// Neurons are processed layer by layer in ascending index order. A neuron
/// whose pre-activation range straddles zero splits the star into its
/// `x ≥ 0` branch and its `x ≤ 0` branch (projected to zero). Leaves keep
/// the latent coefficients of `input`, so a leaf and the input star paired
/// over the same coefficients describe the input–output relation.
pub fn exact_star(net: &Network, input: &StarSet, split_cap: usize) -> Result<StarUnion> {
    if input.dim() != net.in_dim() {
        return Err(Error::Dimension(format!("network expects {} inputs, star has {}", net.in_dim(), input.dim())));
    }
    let mut stars = vec![input.clone()];
    for layer in net.layers() {
        match layer {
            Layer::Affine { w, b } => {
                for s in &mut stars {
                    *s = s.affine_map(w, b)?;
                }
            }
            Layer::Relu => {
                let width = stars.first().map_or(0, StarSet::dim);
                for i in 0..width {
                    let mut next = Vec::with_capacity(stars.len());
                    for s in stars {
                        relu_neuron(s, i, &mut next)?;
                    }
                    if next.len() > split_cap {
                        return Err(Error::SplitBudgetExceeded { cap: split_cap });
                    }
                    stars = next;
                }
            }
        }
    }
    Ok(StarUnion::new(stars))
}

fn relu_neuron(s: StarSet, i: usize, out: &mut Vec<StarSet>) -> Result<()> {
    let quick = s.quick_bounds_of(i);
    if quick.lo >= 0.0 {
        out.push(s);
        return Ok(());
    }
    if quick.hi <= 0.0 {
        out.push(zero_coordinate(&s, i));
        return Ok(());
    }
    let range = match s.coordinate_bounds(i) {
        Ok(r) => r,
        Err(Error::InfeasibleStar) => return Ok(()),
        Err(e) => return Err(e),
    };
    if range.lo >= 0.0 {
        out.push(s);
    } else if range.hi <= 0.0 {
        out.push(zero_coordinate(&s, i));
    } else {
        let row = s.basis().row(i).to_owned();
        let c = s.center()[i];
        let neg_row = -&row;
        out.push(s.add_latent_constraint(neg_row.view(), c));
        let neg = s.add_latent_constraint(row.view(), -c);
        out.push(zero_coordinate(&neg, i));
    }
    Ok(())
}

fn zero_coordinate(s: &StarSet, i: usize) -> StarSet {
    let mut center = s.center().clone();
    let mut basis = s.basis().clone();
    center[i] = 0.0;
    basis.row_mut(i).fill(0.0);
    s.with_map(center, basis).expect("shapes unchanged")
}
