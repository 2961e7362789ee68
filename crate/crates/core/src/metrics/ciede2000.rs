//! The CIEDE2000 colour difference with unit parametric factors.

use super::lab::Lab;

/// Total difference and its three weighted components. `dh` carries the
/// sign of the hue rotation from `p` to `q`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ciede2000 {
    pub de: f64,
    pub dl: f64,
    pub dc: f64,
    pub dh: f64,
}

fn hue_deg(b: f64, a: f64) -> f64 {
    if a == 0.0 && b == 0.0 {
        return 0.0;
    }
    let h = b.atan2(a).to_degrees();
    if h < 0.0 {
        h + 360.0
    } else {
        h
    }
}

pub fn ciede2000(p: Lab, q: Lab) -> Ciede2000 {
    const POW25_7: f64 = 6_103_515_625.0;
    let c1 = p.a.hypot(p.b);
    let c2 = q.a.hypot(q.b);
    let c_bar7 = ((c1 + c2) / 2.0).powi(7);
    let g = 0.5 * (1.0 - (c_bar7 / (c_bar7 + POW25_7)).sqrt());
    let a1 = (1.0 + g) * p.a;
    let a2 = (1.0 + g) * q.a;
    let c1p = a1.hypot(p.b);
    let c2p = a2.hypot(q.b);
    let h1 = hue_deg(p.b, a1);
    let h2 = hue_deg(q.b, a2);

    let d_l = q.l - p.l;
    let d_c = c2p - c1p;
    let chroma_prod = c1p * c2p;
    let dh_deg = if chroma_prod == 0.0 {
        0.0
    } else if (h2 - h1).abs() <= 180.0 {
        h2 - h1
    } else if h2 <= h1 {
        h2 - h1 + 360.0
    } else {
        h2 - h1 - 360.0
    };
    let d_h = 2.0 * chroma_prod.sqrt() * (dh_deg.to_radians() / 2.0).sin();

    let l_bar = (p.l + q.l) / 2.0;
    let c_bar_p = (c1p + c2p) / 2.0;
    let h_bar = if chroma_prod == 0.0 {
        h1 + h2
    } else if (h1 - h2).abs() <= 180.0 {
        (h1 + h2) / 2.0
    } else if h1 + h2 < 360.0 {
        (h1 + h2 + 360.0) / 2.0
    } else {
        (h1 + h2 - 360.0) / 2.0
    };
    let t = 1.0 - 0.17 * (h_bar - 30.0).to_radians().cos()
        + 0.24 * (2.0 * h_bar).to_radians().cos()
        + 0.32 * (3.0 * h_bar + 6.0).to_radians().cos()
        - 0.20 * (4.0 * h_bar - 63.0).to_radians().cos();
    let d_theta = 30.0 * (-((h_bar - 275.0) / 25.0).powi(2)).exp();
    let c_bar_p7 = c_bar_p.powi(7);
    let r_c = 2.0 * (c_bar_p7 / (c_bar_p7 + POW25_7)).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * c_bar_p;
    let s_h = 1.0 + 0.015 * c_bar_p * t;
    let r_t = -(2.0 * d_theta).to_radians().sin() * r_c;

    let dl = d_l / s_l;
    let dc = d_c / s_c;
    let dh = d_h / s_h;
    let de = (dl * dl + dc * dc + dh * dh + r_t * dc * dh).max(0.0).sqrt();
    Ciede2000 { de, dl, dc, dh }
}

/// The 34 verification pairs of Sharma, Wu and Dalal (2005) with their
/// published total differences.
pub const VERIFICATION_PAIRS: [(Lab, Lab, f64); 34] = {
    const fn l(l: f64, a: f64, b: f64) -> Lab {
        Lab::new(l, a, b)
    }
    [
        (l(50.0, 2.6772, -79.7751), l(50.0, 0.0, -82.7485), 2.0425),
        (l(50.0, 3.1571, -77.2803), l(50.0, 0.0, -82.7485), 2.8615),
        (l(50.0, 2.8361, -74.0200), l(50.0, 0.0, -82.7485), 3.4412),
        (l(50.0, -1.3802, -84.2814), l(50.0, 0.0, -82.7485), 1.0000),
        (l(50.0, -1.1848, -84.8006), l(50.0, 0.0, -82.7485), 1.0000),
        (l(50.0, -0.9009, -85.5211), l(50.0, 0.0, -82.7485), 1.0000),
        (l(50.0, 0.0, 0.0), l(50.0, -1.0, 2.0), 2.3669),
        (l(50.0, -1.0, 2.0), l(50.0, 0.0, 0.0), 2.3669),
        (l(50.0, 2.4900, -0.0010), l(50.0, -2.4900, 0.0009), 7.1792),
        (l(50.0, 2.4900, -0.0010), l(50.0, -2.4900, 0.0010), 7.1792),
        (l(50.0, 2.4900, -0.0010), l(50.0, -2.4900, 0.0011), 7.2195),
        (l(50.0, 2.4900, -0.0010), l(50.0, -2.4900, 0.0012), 7.2195),
        (l(50.0, -0.0010, 2.4900), l(50.0, 0.0009, -2.4900), 4.8045),
        (l(50.0, -0.0010, 2.4900), l(50.0, 0.0010, -2.4900), 4.8045),
        (l(50.0, -0.0010, 2.4900), l(50.0, 0.0011, -2.4900), 4.7461),
        (l(50.0, 2.5, 0.0), l(50.0, 0.0, -2.5), 4.3065),
        (l(50.0, 2.5, 0.0), l(73.0, 25.0, -18.0), 27.1492),
        (l(50.0, 2.5, 0.0), l(61.0, -5.0, 29.0), 22.8977),
        (l(50.0, 2.5, 0.0), l(56.0, -27.0, -3.0), 31.9030),
        (l(50.0, 2.5, 0.0), l(58.0, 24.0, 15.0), 19.4535),
        (l(50.0, 2.5, 0.0), l(50.0, 3.1736, 0.5854), 1.0000),
        (l(50.0, 2.5, 0.0), l(50.0, 3.2972, 0.0), 1.0000),
        (l(50.0, 2.5, 0.0), l(50.0, 1.8634, 0.5757), 1.0000),
        (l(50.0, 2.5, 0.0), l(50.0, 3.2592, 0.3350), 1.0000),
        (l(60.2574, -34.0099, 36.2677), l(60.4626, -34.1751, 39.4387), 1.2644),
        (l(63.0109, -31.0961, -5.8663), l(62.8187, -29.7946, -4.0864), 1.2630),
        (l(61.2901, 3.7196, -5.3901), l(61.4292, 2.2480, -4.9620), 1.8731),
        (l(35.0831, -44.1164, 3.7933), l(35.0232, -40.0716, 1.5901), 1.8645),
        (l(22.7233, 20.0904, -46.6940), l(23.0331, 14.9730, -42.5619), 2.0373),
        (l(36.4612, 47.8580, 18.3852), l(36.2715, 50.5065, 21.2231), 1.4146),
        (l(90.8027, -2.0831, 1.4410), l(91.1528, -1.6435, 0.0447), 1.4441),
        (l(90.9257, -0.5406, -0.9208), l(88.6381, -0.8985, -0.7239), 1.5381),
        (l(6.7747, -0.2908, -2.4247), l(5.8714, -0.0985, -2.2286), 0.6377),
        (l(2.0776, 0.0795, -1.1350), l(0.9033, -0.0636, -0.5514), 0.9082),
    ]
};
