use proptest::prelude::*;
use realseal::capture::{capture, recapture_attack, CaptureOptions, DeviceIdentity, ScreenSetup};
use realseal::container::{verify_bytes, Verdict};
use realseal::crypto::KeyPair;
use realseal::geometry::{classify_scene, CameraRig};
use realseal::sensing::{sample_scene, ScenePopulation};
use realseal::trust::TrustAuthority;

fn setup(
    device: &DeviceIdentity,
    listed: bool,
) -> (realseal::trust::TrustList, realseal::crypto::PublicKey) {
    let auth = TrustAuthority::in_memory(KeyPair::from_seed(&[3; 32]).unwrap(), "tok");
    if listed {
        auth.register_manufacturer("Acme", device.public_key())
            .unwrap();
        auth.approve(&device.fingerprint, "tok").unwrap();
    }
    (auth.get_trust_list(), auth.ca_public_key())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn captures_verify_exactly_when_listed(
        key_seed in any::<[u8; 32]>(),
        scene_seed in any::<u64>(),
        flat in any::<bool>(),
        sigma in 0.0f64..1.0,
    ) {
        let device = DeviceIdentity::from_seed("cam", key_seed).unwrap();
        let rig = CameraRig::rectified(500.0, 1.0).unwrap();
        let population = if flat { ScenePopulation::spoof(5.0, 0.0) } else { ScenePopulation::real(5.0, 1.0) };
        let scene = sample_scene(&population, scene_seed);
        let opts = CaptureOptions { pixel_noise_sigma: sigma, seed: scene_seed, ..CaptureOptions::default() };
        let shot = capture(&scene, &rig, &device, &opts).unwrap();

        // the signed label is the geometry's verdict on the emitted correspondences
        let geo = classify_scene(&shot.correspondences, &rig, opts.threshold).unwrap();
        prop_assert_eq!(geo.label, shot.scene_label);

        let (listed, root) = setup(&device, true);
        prop_assert_eq!(verify_bytes(&shot.container, &listed, &root).verdict, Verdict::Verified);
        let (unlisted, root2) = setup(&device, false);
        prop_assert_eq!(verify_bytes(&shot.container, &unlisted, &root2).verdict, Verdict::UntrustedSigner);

        // a recapture by the same device looks the same to the PKI layer
        let fake = recapture_attack(&shot.container, &rig, &device, &ScreenSetup::default()).unwrap();
        prop_assert_eq!(verify_bytes(&fake.container, &listed, &root).verdict, Verdict::Verified);
        prop_assert_eq!(verify_bytes(&fake.container, &unlisted, &root2).verdict, Verdict::UntrustedSigner);
    }
}
