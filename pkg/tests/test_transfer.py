import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gametransfer import codec
from gametransfer.codec import ActionChannel, ChannelSemantic, StateTensorSpec
from gametransfer.games import breakthrough, hex_game, line_game
from gametransfer.geometry import P1, P2
from gametransfer.nn.network import Network, NetworkConfig
from gametransfer.transfer.mapping import (
    mapping_report, match_action_channels, match_state_channels,
)
from gametransfer.transfer.transplant import (
    REINIT_LAYERS, TransferMode, reinit_final_layers, transplant,
)
from gametransfer.transfer.trees import RuleTree, build_rule_tree, zhang_shasha_distance

from oracles import (
    all_trees, edit_script_distance, random_states, random_tree, to_rule_tree,
)

T = RuleTree.build


# -- Zhang-Shasha --------------------------------------------------------------

def test_trivial_distances():
    a = T("a", T("b"), T("c", T("d")))
    assert zhang_shasha_distance(a, a) == 0
    assert zhang_shasha_distance(T("a"), T("b")) == 1
    assert zhang_shasha_distance(T("a"), T("a", T("b"), T("c"))) == 2


def test_classic_example():
    # f(d(a, c(b)), e) vs f(c(d(a, b)), e): distance 2 (delete c, insert c)
    a = T("f", T("d", T("a"), T("c", T("b"))), T("e"))
    b = T("f", T("c", T("d", T("a"), T("b"))), T("e"))
    assert zhang_shasha_distance(a, b) == 2


def test_matches_edit_scripts_on_all_small_trees():
    trees = all_trees(3, ("a", "b"))
    for x, y in itertools.product(trees, repeat=2):
        assert zhang_shasha_distance(to_rule_tree(x), to_rule_tree(y)) == \
            edit_script_distance(x, y)


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1))
def test_matches_edit_scripts_on_random_trees(seed):
    rng = np.random.default_rng(seed)
    x, y = random_tree(rng, 5, "abc"), random_tree(rng, 5, "abc")
    d = zhang_shasha_distance(to_rule_tree(x), to_rule_tree(y))
    assert d == edit_script_distance(x, y)
    assert d == zhang_shasha_distance(to_rule_tree(y), to_rule_tree(x))


def test_rule_trees():
    line_a, line_b = line_game("square", 9, 5), line_game("hexhex", 5, 4, 3)
    assert zhang_shasha_distance(build_rule_tree(line_a, "Disc"),
                                 build_rule_tree(line_b, "Disc")) == 0
    assert build_rule_tree(line_a, "Disc") == build_rule_tree(line_game("square", 9, 3), "Disc")
    assert zhang_shasha_distance(build_rule_tree(breakthrough(5), "Pawn"),
                                 build_rule_tree(line_a, "Disc")) >= 2
    with pytest.raises(ValueError):
        build_rule_tree(line_a, "Pawn")


# -- channel matching ------------------------------------------------------------

def specs(game):
    return codec.build_state_spec(game), codec.build_action_spec(game)


def test_identical_specs_map_to_identity():
    s = codec.build_state_spec(line_game("hexhex", 4, 4, 3, swap_rule=True))
    m = match_state_channels(s, s)
    assert m.sources == tuple(range(len(s))) and not m.unmatched_targets()


def test_reversed_specs_map_to_reversal():
    s = codec.build_state_spec(hex_game(5))
    rev = s.permuted(list(reversed(range(len(s)))))
    assert match_state_channels(s, rev).sources == tuple(reversed(range(len(s))))


def _piece(player, name, tree):
    return ChannelSemantic("piecePresence", player=player, piece=name, tree=tree)


def test_one_source_piece_fans_out_to_two_target_pieces():
    disc = T("piece", T("place", T("empty")))
    src = StateTensorSpec((_piece(P1, "Disc", disc), _piece(P2, "Disc", disc)), 3, 3)
    king = T("piece", T("step", T("any")), T("capture", T("any")))
    man = T("piece", T("step", T("forward")))
    tgt = StateTensorSpec((_piece(P1, "Man", man), _piece(P1, "King", king),
                           _piece(P2, "Man", man), _piece(P2, "King", king)), 3, 3)
    m = match_state_channels(src, tgt)
    assert m.sources == (0, 0, 1, 1)
    assert m.fan_out() == {0: 2, 1: 2}
    assert set(m.distances) == {0, 1, 2, 3}


def test_exact_name_beats_tree_distance_and_ties_go_low():
    a = T("piece", T("x"))
    b = T("piece", T("y"))
    src = StateTensorSpec((_piece(P1, "Rook", a), _piece(P1, "Knight", b),
                           _piece(P1, "Bishop", b)), 3, 3)
    tgt = StateTensorSpec((_piece(P1, "Knight", a), _piece(P1, "Queen", b)), 3, 3)
    m = match_state_channels(src, tgt)
    assert m.sources == (1, 1)  # exact name first; then tie between 1 and 2 -> 1
    assert 0 not in m.distances and m.distances[1] == 0


def test_pieces_never_match_across_players():
    d = T("piece")
    src = StateTensorSpec((_piece(P1, "Disc", d),), 3, 3)
    tgt = StateTensorSpec((_piece(P2, "Disc", d),), 3, 3)
    assert match_state_channels(src, tgt).sources == (None,)


def test_containers_pair_by_order():
    c = lambda i: ChannelSemantic("containerExists", index=i)
    src = StateTensorSpec((c(0), ChannelSemantic("lastMoveTo"), c(1)), 3, 3)
    tgt = StateTensorSpec((c(5), c(6), c(7), ChannelSemantic("swappedRoles")), 3, 3)
    assert match_state_channels(src, tgt).sources == (0, 2, None, None)


def test_breakthrough_pawn_matches_line_disc():
    m = match_state_channels(codec.build_state_spec(line_game("square", 5, 4)),
                             codec.build_state_spec(breakthrough(5)))
    assert m.sources == tuple(range(9)) and m.distances[1] == m.distances[2] > 0


@pytest.mark.parametrize("src_game,tgt_game,expected", [
    (line_game("square", 5, 4), hex_game(7), (0, 1, 2)),
    (line_game("square", 5, 4), breakthrough(5), (0,) * 49 + (1, 2)),
    (breakthrough(5), line_game("square", 5, 4), (24, 49, 50)),
    (breakthrough(5), breakthrough(8), tuple(range(51))),
])
def test_action_matching(src_game, tgt_game, expected):
    m = match_action_channels(codec.build_action_spec(src_game), codec.build_action_spec(tgt_game))
    assert m.sources == expected


def test_movement_to_placement_drops_48_channels():
    m = match_action_channels(codec.build_action_spec(breakthrough(5)),
                              codec.build_action_spec(hex_game(5)))
    assert len(m.unused_sources()) == 48 and 24 not in m.unused_sources()


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1))
def test_matching_is_never_many_to_one(seed):
    rng = np.random.default_rng(seed)
    games = [hex_game(3, swap_rule=True), line_game("square", 3, 3), breakthrough(4),
             line_game("hexhex", 3, 4, 3, swap_rule=True)]
    src = codec.build_state_spec(games[int(rng.integers(4))])
    tgt = codec.build_state_spec(games[int(rng.integers(4))])
    keep = rng.random(len(tgt)) < 0.8
    tgt = tgt.permuted([i for i in rng.permutation(len(tgt)) if keep[i]] or [0])
    m = match_state_channels(src, tgt)
    for j, i in enumerate(m.sources):
        if i is not None:
            a, b = src.channels[i], tgt.channels[j]
            assert a.kind == b.kind
            if a.kind != "containerExists":
                assert a.player == b.player
    # every target channel receives at most one source by construction
    assert len(m.sources) == len(tgt)


def test_mapping_report_mentions_everything():
    sm = match_state_channels(codec.build_state_spec(hex_game(5, swap_rule=True)),
                              codec.build_state_spec(breakthrough(5)))
    am = match_action_channels(codec.build_action_spec(hex_game(5)),
                               codec.build_action_spec(breakthrough(5)))
    text = mapping_report(sm, am, "hex -> breakthrough")
    assert "tree edit distance" in text
    assert "dropped source channels: 9" in text
    assert "one-to-many: source 0 -> 49 targets" in text
    sm2 = match_state_channels(codec.build_state_spec(hex_game(5)),
                               codec.build_state_spec(hex_game(5, swap_rule=True)))
    assert "UNMATCHED" in mapping_report(sm2, am)


# -- transplant ----------------------------------------------------------------

def trained_like(game, rng, hidden=6):
    s, a = specs(game)
    net = Network.initialize(NetworkConfig(len(s), len(a), hidden=hidden, blocks=1,
                                           layers_per_block=2), rng)
    # push BN running stats away from identity so copying them matters
    for k in net.buffers:
        net.buffers[k][:] = rng.uniform(0.5, 1.5, size=net.buffers[k].shape)
    return net


def test_same_specs_give_bitwise_copy(rng):
    game = hex_game(5)
    net = trained_like(game, rng)
    out = transplant(net, specs(game), specs(game))
    for k in net.params:
        assert np.array_equal(out.params[k], net.params[k])
    for k in net.buffers:
        assert np.array_equal(out.buffers[k], net.buffers[k])


def test_permuted_channels_give_identical_outputs(rng):
    game = line_game("square", 5, 4, swap_rule=True)
    net = trained_like(game, rng)
    s, a = specs(game)
    ps, pa = s.permuted(rng.permutation(len(s))), a.permuted(rng.permutation(len(a)))
    out = transplant(net, (s, a), (ps, pa))
    perm_a = [a.index_of(c) for c in pa.channels]
    for state in random_states(game, 20, rng):
        l1, v1 = net.predict(codec.encode_state(state, s))
        l2, v2 = out.predict(codec.encode_state(state, ps))
        assert np.max(np.abs(l1[perm_a] - l2)) < 1e-9 and abs(v1 - v2) < 1e-9


def test_board_size_change_keeps_everything(rng):
    net = trained_like(hex_game(5), rng)
    out = transplant(net, specs(hex_game(5)), specs(hex_game(7)))
    for k in net.params:
        assert np.array_equal(out.params[k], net.params[k])
    assert out.config == net.config


def test_placement_to_movement_logits(rng):
    game = line_game("square", 5, 4)
    net = trained_like(game, rng)
    s, a = specs(game)
    move_spec = codec.build_action_spec(breakthrough(5))
    out = transplant(net, (s, a), (s, move_spec))
    for state in random_states(game, 10, rng):
        x = codec.encode_state(state, s)
        src_logits, _ = net.predict(x)
        tgt_logits, _ = out.predict(x)
        assert np.max(np.abs(tgt_logits[:49] - src_logits[0][None])) < 1e-9
        assert np.max(np.abs(tgt_logits[49:] - src_logits[1:])) < 1e-9


def test_movement_to_placement_logits(rng):
    game = breakthrough(5)
    net = trained_like(game, rng)
    s, a = specs(game)
    place_spec = codec.build_action_spec(line_game("square", 5, 4))
    out = transplant(net, (s, a), (s, place_spec))
    for state in random_states(game, 10, rng):
        x = codec.encode_state(state, s)
        assert np.max(np.abs(out.predict(x)[0][0] - net.predict(x)[0][24])) < 1e-9


def test_novel_state_channel_is_ignored_in_zero_shot(rng):
    game = hex_game(5)
    net = trained_like(game, rng)
    s, a = specs(game)
    tgt = StateTensorSpec(s.channels + (ChannelSemantic("stackHeight"),), s.H, s.W)
    out = transplant(net, (s, a), (tgt, a))
    assert not out.params["stem.conv.w"][:, -1].any()
    for state in random_states(game, 10, rng):
        x = codec.encode_state(state, s)
        xt = np.concatenate([x, rng.random((1, s.H, s.W))])  # junk in the novel channel
        l1, v1 = net.predict(x)
        l2, v2 = out.predict(xt)
        assert np.max(np.abs(l1 - l2)) < 1e-9 and abs(v1 - v2) < 1e-9


def test_dropped_source_channel_acts_as_zero_input(rng):
    game = hex_game(5, swap_rule=True)
    net = trained_like(game, rng)
    s, a = specs(game)
    tgt_game = hex_game(5)
    ts, ta = specs(tgt_game)
    out = transplant(net, (s, a), (ts, ta))
    for state in random_states(tgt_game, 10, rng):
        xt = codec.encode_state(state, ts)
        padded = np.concatenate([xt, np.zeros((1, s.H, s.W))])  # swappedRoles always 0
        l1, v1 = net.predict(padded)
        l2, v2 = out.predict(xt)
        assert np.max(np.abs(l1[:3] - l2)) < 1e-9 and abs(v1 - v2) < 1e-9


def test_finetune_mode_fills_unmatched_slices(rng):
    game = hex_game(5)
    net = trained_like(game, rng)
    s, a = specs(game)
    tgt = StateTensorSpec(s.channels + (ChannelSemantic("stackHeight"),), s.H, s.W)
    out = transplant(net, (s, a), (tgt, a), TransferMode("finetune"), rng)
    w = out.params["stem.conv.w"][:, -1]
    bound = 1 / np.sqrt(len(tgt) * 9)
    assert np.all(w != 0) and np.all(np.abs(w) <= bound)
    assert np.array_equal(out.params["stem.conv.w"][:, :-1], net.params["stem.conv.w"])
    with pytest.raises(ValueError):
        transplant(net, (s, a), (tgt, a), TransferMode("finetune"))  # no rng


def test_transfer_mode_constraints():
    with pytest.raises(ValueError):
        TransferMode("zero-shot", reinit_final_layers=True)
    with pytest.raises(ValueError):
        TransferMode("one-shot")


def test_reinit_final_layers_only_touches_head_convs(rng):
    game = hex_game(5)
    net = trained_like(game, rng)
    out = transplant(net, specs(game), specs(hex_game(6)),
                     TransferMode("finetune", reinit_final_layers=True), rng)
    for k in net.params:
        layer = k.rsplit(".", 1)[0]
        if layer in REINIT_LAYERS:
            assert not np.array_equal(out.params[k], net.params[k])
        else:
            assert np.array_equal(out.params[k], net.params[k])
    fresh = Network.initialize(net.config, np.random.default_rng(0))
    again = reinit_final_layers(net.copy(), fresh)
    assert np.array_equal(again.params["value.conv.w"], fresh.params["value.conv.w"])


def test_source_specs_must_match_network(rng):
    net = trained_like(hex_game(5), rng)
    with pytest.raises(ValueError):
        transplant(net, specs(breakthrough(5)), specs(hex_game(5)))
