//! Netlist corpus: valid decks that must round-trip and malformed decks
//! that must fail with a diagnostic at a known line and column.

const MODELS: &str = "\
.model nch nfet vt0=0.35 kprime=300u n=1.3 lambda0=0.02 chi=0.2 gamma=1 kf=1e-25 cox=8.6m
.model pch pfet vt0=0.35 kprime=300u n=1.3 lambda0=0.02 chi=0.2 gamma=1 kf=1e-25 cox=8.6m
";

pub struct Valid {
    pub name: &'static str,
    pub text: String,
}

pub struct Malformed {
    pub name: &'static str,
    pub text: String,
    /// Expected diagnostic position (line, column).
    pub at: (usize, usize),
}

fn deck(body: &str) -> String {
    format!("* test deck\n{MODELS}{body}")
}

pub fn valid() -> Vec<Valid> {
    let inverter = "VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n";
    let cases: Vec<(&'static str, String)> = vec![
        ("inverter", deck(inverter)),
        ("inverter_op", deck(&format!("{inverter}.op\n"))),
        ("inverter_end", deck(&format!("{inverter}.op\n.end\n"))),
        ("inverter_dc", deck(&format!("{inverter}.dc VIN 0 0.9 101\n"))),
        ("backgate_feedback", deck("VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\nM1 out in 0 out nch W=1u L=1u\nM2 out in vdd out pch W=1u L=1u\n")),
        ("uppercase_keywords", deck("VDD VDD 0 DC 0.9\nVIN IN GND DC 0.45\nM1 OUT IN GND GND NCH W=1U L=1U\nM2 OUT IN VDD VDD PCH W=1U L=1U\n.OP\n.END\n")),
        ("no_dc_keyword", deck("VDD vdd 0 0.9\nVIN in 0 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n")),
        ("engineering_lengths", deck("VDD vdd 0 DC 900m\nVIN in 0 DC 450m\nM1 out in 0 0 nch W=2.5u L=150n\nM2 out in vdd vdd pch W=2.5u L=150n\n")),
        ("exponent_lengths", deck("VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1e-6 L=1.5e-7\nM2 out in vdd vdd pch W=1e-6 L=1.5e-7\n")),
        ("param_order_swapped", deck("VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\nM1 out in 0 0 nch L=1u W=1u\nM2 out in vdd vdd pch L=1u W=1u\n")),
        ("comments_and_blanks", deck(&format!("\n* a comment\n\n{inverter}\n* trailing\n"))),
        ("tabs", deck("VDD\tvdd\t0\tDC\t0.9\nVIN in 0 DC 0.45\nM1\tout in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n")),
        ("models_after_devices", format!("{inverter}{MODELS}")),
        ("model_subset", "VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\n.model nch nfet vt0=0.3\n.model pch pfet chi=0.1\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n".into()),
        ("model_vclm_dvt", "VDD vdd 0 DC 0.9\n.model nch nfet vclm=2 dvt=-10m\n.model pch pfet vclm=inf\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n".into()),
        ("nmos_pmos_aliases", "VDD vdd 0 DC 0.9\n.model nch nmos\n.model pch pmos\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n".into()),
        ("chi_zero", "VDD vdd 0 DC 0.9\n.model nch nfet chi=0\n.model pch pfet chi=0\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n".into()),
        ("differential_pair", deck("VDD vdd 0 DC 1.1\nVIN1 in1 0 DC 0.55\nVIN2 in2 0 DC 0.55\nM1 out1 in1 tn out1 nch W=1u L=1u\nM2 out2 in2 tn out2 nch W=1u L=1u\nM3 out1 in1 vdd out1 pch W=1u L=1u\nM4 out2 in2 vdd out2 pch W=1u L=1u\nM5 tn out1 0 0 nch W=1u L=1u\nM6 tn out2 0 0 nch W=1u L=1u\n")),
        ("negative_supply", deck("VSS 0 vss DC 0.45\nVDD vdd 0 DC 0.45\nVIN in 0 DC 0\nM1 out in vss vss nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n")),
        ("negative_value", deck("VDD vdd 0 DC 0.9\nVIN in 0 DC -0.1\nM1 out in 0 0 nch W=1u L=1u\nM2 out in vdd vdd pch W=1u L=1u\n")),
        ("long_names", deck("Vsupply_main vdd 0 DC 0.9\nVinput in 0 DC 0.45\nMn_input out in 0 0 nch W=1u L=1u\nMp_input out in vdd vdd pch W=1u L=1u\n")),
        ("dangling_warning", deck("VDD vdd 0 DC 0.9\nVIN in 0 DC 0.45\nM1 out in 0 0 nch W=1u L=1u\nM2 out2 in vdd vdd pch W=1u L=1u\n")),
        ("multiple_dc", deck(&format!("{inverter}.dc VIN 0 0.9 11\n.dc VDD 0.5 1 6\n"))),
        ("text_after_end", deck(&format!("{inverter}.end\nthis is ignored\n"))),
        ("stacked_devices", deck("VDD vdd 0 DC 1.2\nVIN in 0 DC 0.6\nVB b 0 DC 0.5\nM1 x in 0 0 nch W=1u L=1u\nM2 out b x 0 nch W=1u L=1u\nM3 out in vdd vdd pch W=2u L=1u\n")),
    ];
    cases.into_iter().map(|(name, text)| Valid { name, text }).collect()
}

pub fn malformed() -> Vec<Malformed> {
    // The models occupy lines 2 and 3; bodies start on line 4.
    let cases: Vec<(&'static str, String, (usize, usize))> = vec![
        ("four_terminal_mosfet", deck("M1 out in 0 nch W=1u L=1u\n"), (4, 17)),
        ("missing_width", deck("M1 out in 0 0 nch L=1u\n"), (4, 23)),
        ("missing_length", deck("M1 out in 0 0 nch W=1u\n"), (4, 23)),
        ("missing_model", deck("M1 out in 0 0\n"), (4, 14)),
        ("zero_width", deck("M1 out in 0 0 nch W=0 L=1u\n"), (4, 19)),
        ("negative_length", deck("M1 out in 0 0 nch W=1u L=-1u\n"), (4, 24)),
        ("bad_suffix", deck("M1 out in 0 0 nch W=1x L=1u\n"), (4, 19)),
        ("unknown_instance_param", deck("M1 out in 0 0 nch W=1u L=1u M=2\n"), (4, 29)),
        ("duplicate_param", deck("M1 out in 0 0 nch W=1u W=2u L=1u\n"), (4, 24)),
        ("extra_positional", deck("M1 out in 0 0 nch extra W=1u L=1u\n"), (4, 19)),
        ("undefined_model", deck("VDD vdd 0 DC 0.9\nM1 out in 0 0 xch W=1u L=1u\n"), (5, 1)),
        ("source_missing_value", deck("VDD vdd 0 DC\n"), (4, 13)),
        ("source_bad_value", deck("VDD vdd 0 DC abc\n"), (4, 14)),
        ("source_extra_token", deck("VDD vdd 0 DC 0.9 0.1\n"), (4, 18)),
        ("source_missing_nodes", deck("VDD vdd\n"), (4, 8)),
        ("unknown_element", deck("R1 a b 1k\n"), (4, 1)),
        ("bare_element_letter", deck("M out in 0 0 nch W=1u L=1u\n"), (4, 1)),
        ("duplicate_element", deck("VDD vdd 0 DC 0.9\nvdd x 0 DC 1\n"), (5, 1)),
        ("unknown_directive", deck(".tran 1n 10n\n"), (4, 1)),
        ("op_with_arguments", deck(".op now\n"), (4, 5)),
        ("dc_bad_points", deck("VIN in 0 DC 0\n.dc VIN 0 1 2.5\n"), (5, 13)),
        ("dc_unknown_source", deck("VIN in 0 DC 0\n.dc VX 0 1 11\n"), (5, 5)),
        ("model_unknown_type", ".model nch bjt vt0=0.3\n".into(), (1, 12)),
        ("model_unknown_key", ".model nch nfet vto=0.3\n".into(), (1, 17)),
        ("model_invalid_card", ".model nch nfet chi=1.5\n".into(), (1, 1)),
    ];
    cases.into_iter().map(|(name, text, at)| Malformed { name, text, at }).collect()
}
