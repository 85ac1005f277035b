"""Action-space vocabularies, mapping tables, and binning."""

import math

import pytest

from alertsynth.action_space import (ConfigError, DEFAULT_AIS_CATEGORIES,
                                     MANEUVER_LABELS, TIME_BIN_LABELS,
                                     WeightConfig, bin_elapsed,
                                     bin_elapsed_index, load_mappings, map_ais,
                                     map_service, maneuver_index)
from alertsynth.export_cli import RunConfig
from alertsynth.ingest import Alert


def mk_alert(sig_id=0, text="", src="198.51.100.1", dst="10.0.0.1"):
    return Alert(ts=0, src_ip=src, dst_ip=dst, src_port=50000, dst_port=80,
                 proto="tcp", signature_id=sig_id, signature_text=text,
                 sensor=None, raw_seq=0)


def default_paths():
    cfg = RunConfig()
    return cfg.ais_map, cfg.port_table, cfg.homenet


class TestVocabularies:
    def test_cardinalities(self, tables):
        ais, service, maneuver, timebin = tables.cardinalities
        assert ais == 12
        assert maneuver == 21
        assert timebin == 10
        # service labels = distinct table labels plus the three specials
        table_labels = set(tables.port_labels.values())
        assert service == len(table_labels) + 3
        for special in ("ephemeral", "reserved", "other"):
            assert special in tables.service_labels

    def test_default_categories_are_distinct(self):
        assert len(set(DEFAULT_AIS_CATEGORIES)) == 12

    def test_maneuver_labels(self):
        assert len(MANEUVER_LABELS) == 21
        assert "inbound:stream_start" in MANEUVER_LABELS
        assert "internal:internal_pivot" in MANEUVER_LABELS
        idx = {maneuver_index(d, t) for d in ("inbound", "outbound", "internal")
               for t in ("stream_start", "same_src_same_dst", "same_src_new_dst",
                         "new_src_same_dst", "src_is_last_dst", "dst_is_last_src",
                         "internal_pivot")}
        assert idx == set(range(21))

    def test_vocabularies_match_cardinalities(self, tables):
        for vocab, card in zip(tables.vocabularies, tables.cardinalities):
            assert len(vocab) == card
            assert len(set(vocab)) == card


class TestServiceMapping:
    @pytest.mark.parametrize("port,proto,label", [
        (88, "tcp", "kerberos"),
        (88, "udp", "kerberos"),      # "any" row expands to both protocols
        (53, "udp", "dns"),
        (53, "tcp", "dns"),
        (80, "tcp", "http"),
        (80, "udp", "other"),         # table hit is per (port, proto)
        (1433, "tcp", "ms-sql"),
        (5985, "tcp", "wsman"),
        (0, "tcp", "reserved"),
        (None, "tcp", "reserved"),
        (49151, "tcp", "other"),
        (49152, "tcp", "ephemeral"),
        (65535, "udp", "ephemeral"),
        (12345, "tcp", "other"),
    ])
    def test_examples(self, tables, port, proto, label):
        assert map_service(port, proto, tables) == label

    def test_total_over_port_space(self, tables):
        vocab = set(tables.service_labels)
        for proto in ("tcp", "udp", "icmp", "other"):
            for port in (0, 1, 21, 22, 88, 1432, 1434, 40000, 49151, 49152,
                         60000, 65535):
                assert map_service(port, proto, tables) in vocab
        assert map_service(None, "other", tables) in vocab


class TestAisMapping:
    def test_exact_id_wins_over_text(self, tables):
        alert = mk_alert(sig_id=2022494, text="ET SCAN something")
        assert map_ais(alert, tables) == "PrivilegeEscalation"

    def test_keyword_order_specific_before_generic(self, tables):
        a = mk_alert(text="ET EXPLOIT vulnerability check against service")
        assert map_ais(a, tables) == "VulnerabilityDiscovery"
        b = mk_alert(text="ET EXPLOIT privilege escalation attempt")
        assert map_ais(b, tables) == "PrivilegeEscalation"
        c = mk_alert(text="ET EXPLOIT heap spray exploit landed")
        assert map_ais(c, tables) == "ArbitraryCodeExecution"

    def test_case_insensitive(self, tables):
        assert map_ais(mk_alert(text="BRUTE FORCE LOGIN"), tables) == "BruteForce"

    def test_unknown_defaults_to_discovery(self, tables):
        assert map_ais(mk_alert(sig_id=999, text="no match here"), tables) == "Discovery"

    def test_stage_texts_round_trip(self, tables):
        from alertsynth.synth_harness import STAGE_SIGNATURES
        for stage, (sig_id, text) in STAGE_SIGNATURES.items():
            assert map_ais(mk_alert(sig_id=sig_id, text=text), tables) == stage


class TestTimeBins:
    @pytest.mark.parametrize("dt,label", [
        (None, "stream_start"),
        (0.0, "0s_to_1ms"),
        (0.0005, "0s_to_1ms"),
        (0.001, "1ms_to_100ms"),      # edges are closed on the left
        (0.1, "100ms_to_1s"),
        (1.0, "1s_to_10s"),
        (10.0, "10s_to_60s"),
        (60.0, "60s_to_600s"),
        (600.0, "600s_to_1h"),
        (3600.0, "1h_to_6h"),
        (21599.999, "1h_to_6h"),
        (21600.0, "6h_plus"),
        (1e9, "6h_plus"),
        (-5.0, "0s_to_1ms"),          # negative gaps clamp to zero
    ])
    def test_examples(self, dt, label):
        assert bin_elapsed(dt) == label

    def test_index_matches_label(self):
        for dt in (None, 0.0, 0.5, 5.0, 50.0, 500.0, 5000.0, 50000.0):
            assert TIME_BIN_LABELS[bin_elapsed_index(dt)] == bin_elapsed(dt)


class TestWeightConfig:
    def test_renormalizes(self):
        w = WeightConfig.normalized(3.0, 3.0, 3.0, 1.0)
        assert abs(sum(w.vector) - 1.0) < 1e-12
        assert abs(w.w_a - 0.3) < 1e-12
        assert abs(w.w_t - 0.1) < 1e-12

    def test_one_hot_weights_allowed(self):
        w = WeightConfig.normalized(1.0, 0.0, 0.0, 0.0)
        assert w.vector == (1.0, 0.0, 0.0, 0.0)

    def test_negative_rejected(self):
        with pytest.raises(ConfigError):
            WeightConfig.normalized(0.5, -0.1, 0.4, 0.2)

    def test_zero_sum_rejected(self):
        with pytest.raises(ConfigError):
            WeightConfig.normalized(0.0, 0.0, 0.0, 0.0)


class TestLoadMappings:
    def test_duplicate_signature_id_fatal(self, tmp_path):
        ais_map, port_table, homenet = default_paths()
        bad = tmp_path / "ais.csv"
        bad.write_text("100,Discovery\n100,BruteForce\n")
        with pytest.raises(ConfigError, match="duplicate signature id"):
            load_mappings(str(bad), port_table, homenet)

    def test_unknown_category_fatal(self, tmp_path):
        _, port_table, homenet = default_paths()
        bad = tmp_path / "ais.csv"
        bad.write_text("100,Lateral\n")
        with pytest.raises(ConfigError, match="unknown intent category"):
            load_mappings(str(bad), port_table, homenet)

    def test_duplicate_port_row_fatal(self, tmp_path):
        ais_map, _, homenet = default_paths()
        bad = tmp_path / "ports.csv"
        bad.write_text("80,tcp,http\n80,any,www\n")
        with pytest.raises(ConfigError, match="duplicate port-table row"):
            load_mappings(ais_map, str(bad), homenet)

    def test_port_out_of_range_fatal(self, tmp_path):
        ais_map, _, homenet = default_paths()
        bad = tmp_path / "ports.csv"
        bad.write_text("70000,tcp,nope\n")
        with pytest.raises(ConfigError, match="out of range"):
            load_mappings(ais_map, str(bad), homenet)

    def test_bad_homenet_fatal(self, tmp_path):
        ais_map, port_table, _ = default_paths()
        bad = tmp_path / "homenet.txt"
        bad.write_text("not-a-cidr\n")
        with pytest.raises(ConfigError, match="bad homenet line"):
            load_mappings(ais_map, port_table, str(bad))

    def test_missing_file_fatal(self):
        ais_map, port_table, homenet = default_paths()
        with pytest.raises(ConfigError, match="cannot read"):
            load_mappings("/nonexistent/ais.csv", port_table, homenet)

    def test_custom_categories(self, tmp_path):
        ais_map, port_table, homenet = default_paths()
        own = tmp_path / "ais.csv"
        own.write_text("100,Strange\nprobe,Discovery\n")
        tables = load_mappings(str(own), port_table, homenet,
                               ais_categories=("Discovery", "Strange"))
        assert tables.cardinalities[0] == 2
        assert map_ais(mk_alert(sig_id=100), tables) == "Strange"

    def test_categories_must_include_discovery(self, tmp_path):
        ais_map, port_table, homenet = default_paths()
        own = tmp_path / "ais.csv"
        own.write_text("100,Strange\n")
        with pytest.raises(ConfigError, match="Discovery"):
            load_mappings(str(own), port_table, homenet,
                          ais_categories=("Strange", "Other"))

    def test_duplicate_categories_fatal(self):
        ais_map, port_table, homenet = default_paths()
        with pytest.raises(ConfigError, match="duplicate intent category"):
            load_mappings(ais_map, port_table, homenet,
                          ais_categories=("Discovery", "Discovery"))


class TestHomenet:
    @pytest.mark.parametrize("ip,internal", [
        ("10.1.2.3", True),
        ("172.16.0.1", True),
        ("172.31.255.254", True),
        ("172.32.0.1", False),
        ("192.168.255.255", True),
        ("192.169.0.0", False),
        ("8.8.8.8", False),
        ("203.0.113.50", False),
        ("::1", False),               # v6 is handled, just not internal here
    ])
    def test_contains(self, tables, ip, internal):
        assert tables.homenet.contains(ip) is internal
