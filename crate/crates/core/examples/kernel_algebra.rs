//! Closed-form algebra of the Gaussian-mixture kernels: moments, norms,
//! rescaling, convolution and inner products.

use wwkde::kernels::StandardKernel;
use wwkde::quadrature::integrate;

fn main() -> wwkde::Result<()> {
    println!("kernel  order  mass       m1        m2        m_order+1    |K|_2^2   |K|_1");
    for kind in StandardKernel::ALL {
        let k = kind.kernel();
        let c = k.norms()?;
        println!(
            "{kind:<7} {:<6} {:<10.6} {:<9.2e} {:<9.2e} {:<12.4e} {:<9.5} {:.5}",
            kind.order(),
            k.total_mass(),
            k.moment(1),
            k.moment(2),
            k.moment(kind.order() + 1),
            c.l2_norm_sq,
            c.l1_norm
        );
    }

    // <K_a, K_b(. - d)> in closed form, checked against quadrature.
    let a = StandardKernel::K3.kernel().scale(0.4)?;
    let b = StandardKernel::K7.kernel().scale(0.9)?;
    let d = 0.3;
    let exact = a.inner_product(&b, d);
    let q = integrate(|u| a.eval(u) * b.eval(u - d), -15.0, 15.0, 1e-12)?;
    let via_convolution = a.convolve(&b).eval(d);
    println!("\ninner product: closed form {exact:.12}, quadrature {:.12}, convolution {via_convolution:.12}", q.value);
    Ok(())
}
