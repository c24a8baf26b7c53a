//! Scratch diagnostic: per-parameter finite-difference comparison for one
//! seeded draw of the acceptance gradient oracle, reporting the largest
//! relative errors instead of just the worst.

use ndarray::Array3;
use quickspoof::features::FeatureMap;
use quickspoof::model::{ArchDims, EmbedderNet};
use quickspoof::nn::triplet_batch_loss;
use quickspoof::seed;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_map(rows: usize, cols: usize, id: &str, rng: &mut impl Rng) -> FeatureMap {
    let values =
        ndarray::Array2::from_shape_fn((rows, cols), |_| rng.sample::<f32, _>(StandardNormal));
    FeatureMap { values, utt_id: id.to_string() }
}

fn main() {
    let draw: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let dims = ArchDims {
        input_dim: 6,
        lstm1: 8,
        lstm2: 8,
        dense1: 16,
        dense2: 8,
        embed_dim: 4,
    };
    let h = 1e-5;
    let alpha = 0.2;
    let triplets = [[0usize, 1, 2], [3, 4, 5]];

    let mut rng = seed::rng_indexed(13, "acceptance-grad", draw);
    let mut net: EmbedderNet<f64> = EmbedderNet::new(dims.clone(), 0.99, &mut rng).unwrap();
    let maps: Vec<FeatureMap> = (0..6)
        .map(|i| random_map(dims.input_dim, 9, &format!("g{draw}-{i}"), &mut rng))
        .collect();
    let refs: Vec<&FeatureMap> = maps.iter().collect();

    let loss = |net: &mut EmbedderNet<f64>| -> f64 {
        let x: Array3<f64> = net.build_input(&refs).unwrap();
        let mut r = seed::rng(0, "acceptance-grad-fwd");
        let (emb, _) = net.forward_train(x, 0.0, false, &mut r).unwrap();
        triplet_batch_loss(emb.view(), &triplets, alpha).unwrap().mean_loss
    };

    let x: Array3<f64> = net.build_input(&refs).unwrap();
    let mut r = seed::rng(0, "acceptance-grad-fwd");
    let (emb, cache) = net.forward_train(x, 0.0, false, &mut r).unwrap();
    let grad = triplet_batch_loss(emb.view(), &triplets, alpha).unwrap();
    println!("mean_loss {} active {}", grad.mean_loss, grad.active);
    println!("emb:\n{:?}", emb);
    {
        let x: Array3<f64> = net.build_input(&refs).unwrap();
        let l1 = net.lstm1.forward_batch(x).unwrap();
        let h1 = l1.seq_output().to_owned();
        let l2 = net.lstm2.forward_batch(h1).unwrap();
        let last = l2.last_output().to_owned();
        let (y1, _) = net.fc1.forward(last.view()).unwrap();
        let (y1, _) = net.bn1.forward_train(y1.view(), false).unwrap();
        let report = |name: &str, a: &ndarray::Array2<f64>| {
            let mut mags: Vec<f64> = a.iter().map(|v| v.abs()).collect();
            mags.sort_by(|x, y| x.partial_cmp(y).unwrap());
            println!("{name}: smallest |pre-activation| {:?}", &mags[..5.min(mags.len())]);
        };
        report("bn1-out (relu1 pre)", &y1);
        let mut a1 = y1;
        a1.mapv_inplace(|v| v.max(0.0));
        let (y2, _) = net.fc2.forward(a1.view()).unwrap();
        let (y2, _) = net.bn2.forward_train(y2.view(), false).unwrap();
        report("bn2-out (relu2 pre)", &y2);
    }
    net.zero_grads();
    net.backward(cache, grad.d_emb.view()).unwrap();

    let mut rows: Vec<(f64, String)> = Vec::new();
    for pi in 0..net.params().len() {
        for idx in 0..net.params()[pi].len() {
            let orig = net.params()[pi].values.as_slice().unwrap()[idx];
            net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig + h;
            let up = loss(&mut net);
            net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig - h;
            let down = loss(&mut net);
            net.params_mut()[pi].values.as_slice_mut().unwrap()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let analytic = net.params()[pi].grad.as_slice().unwrap()[idx];
            if analytic.abs() < 1e-12 && fd.abs() < 3e-11 {
                continue;
            }
            let rel = (analytic - fd).abs() / analytic.abs().max(fd.abs());
            rows.push((
                rel,
                format!(
                    "{}[{idx}]: analytic {analytic:.6e} fd {fd:.6e}",
                    net.params()[pi].name
                ),
            ));
        }
    }
    rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    println!("checked {} params; top 25 rel errors:", rows.len());
    for (rel, what) in rows.iter().take(25) {
        println!("  {rel:.4e}  {what}");
    }
    let over = rows.iter().filter(|(r, _)| *r > 1e-4).count();
    println!("params over 1e-4: {over}");
}
