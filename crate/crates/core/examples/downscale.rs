//! Downscales a PNG (or a generated test pattern) to a few scales.
//!
//! cargo run -p iisa --example downscale -- [input.png] [out_dir]

use iisa::resample::{downscale, Image, KernelKind, ResampleSpec, ScaleFactor};

fn pattern() -> Image {
    let (w, h) = (256u32, 192u32);
    let mut px = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            // Fine stripes whose frequency rises to the right: they alias first.
            let f = 0.02 + 0.5 * x as f64 / w as f64;
            let v = (127.5 + 127.5 * (f * x as f64).sin()) as u8;
            px.extend([v, (y * 255 / h) as u8, 255 - v]);
        }
    }
    Image::new("pattern", w, h, 3, px).expect("valid dimensions")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let input = args.next();
    let out_dir = std::path::PathBuf::from(args.next().unwrap_or_else(|| "downscaled".into()));
    std::fs::create_dir_all(&out_dir)?;
    let img = match input {
        Some(p) => Image::open(&p, "input")?,
        None => pattern(),
    };
    println!("source {}x{}", img.width(), img.height());
    for kernel in [KernelKind::Lanczos, KernelKind::Bicubic, KernelKind::Bilinear] {
        let spec = ResampleSpec::with_kernel(kernel);
        for s in [0.75, 0.5, 0.25, 0.1] {
            let out = downscale(&img, ScaleFactor::new(s)?, &spec)?;
            let path = out_dir.join(format!("{}_{s}.png", spec.tag()));
            out.save_png(&path)?;
            println!("{:<12} s={s:<5} -> {}x{}  {}", spec.tag(), out.width(), out.height(), path.display());
        }
    }
    Ok(())
}
