use leakspot_imageproc::io::{decode_pnm, encode_pnm, read_image, read_png, write_pnm};
use leakspot_imageproc::{resize_bilinear, ImageU8};
use proptest::prelude::*;

fn arb_image() -> impl Strategy<Value = ImageU8> {
    (1usize..20, 1usize..20, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(any::<u8>(), h * w * c).prop_map(move |d| ImageU8::new(h, w, c, d).unwrap())
    })
}

proptest! {
    #[test]
    fn pnm_round_trip_is_bit_exact(img in arb_image()) {
        prop_assert_eq!(decode_pnm(&encode_pnm(&img)).unwrap(), img);
    }

    #[test]
    fn resize_to_own_size_is_identity(img in arb_image()) {
        prop_assert_eq!(resize_bilinear(&img, img.height(), img.width()).unwrap(), img);
    }
}

#[test]
fn pnm_files_round_trip_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let rgb = ImageU8::new(3, 2, 3, (0..18).map(|v| v * 13).collect()).unwrap();
    let gray = ImageU8::new(2, 5, 1, (0..10).map(|v| 250 - v).collect()).unwrap();
    let (a, b) = (dir.path().join("a.ppm"), dir.path().join("b.pgm"));
    write_pnm(&a, &rgb).unwrap();
    write_pnm(&b, &gray).unwrap();
    assert_eq!(read_image(&a).unwrap(), rgb);
    assert_eq!(read_image(&b).unwrap(), gray);
}

fn write_png(path: &std::path::Path, w: u32, h: u32, color: png::ColorType, data: &[u8]) {
    let file = std::fs::File::create(path).unwrap();
    let mut enc = png::Encoder::new(std::io::BufWriter::new(file), w, h);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header().unwrap().write_image_data(data).unwrap();
}

#[test]
fn png_rgb_and_gray_are_ingested() {
    let dir = tempfile::tempdir().unwrap();
    let rgb: Vec<u8> = (0..4 * 3 * 3).map(|v| (v * 7) as u8).collect();
    let p = dir.path().join("rgb.png");
    write_png(&p, 4, 3, png::ColorType::Rgb, &rgb);
    let img = read_png(&p).unwrap();
    assert_eq!((img.height(), img.width(), img.channels()), (3, 4, 3));
    assert_eq!(img.data(), &rgb[..]);

    let gray: Vec<u8> = (0..6).collect();
    let p = dir.path().join("gray.png");
    write_png(&p, 3, 2, png::ColorType::Grayscale, &gray);
    assert_eq!(read_image(&p).unwrap().data(), &gray[..]);

    let p = dir.path().join("alpha.png");
    write_png(&p, 1, 1, png::ColorType::Rgba, &[1, 2, 3, 4]);
    assert!(read_png(&p).is_err());
}
