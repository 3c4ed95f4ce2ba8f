import numpy as np
import pytest

from omegadp.automata import (
    Alphabet, Automaton, lasso_member_nba, lasso_member_uca)
from omegadp.complement import complement_uca
from omegadp.lasso_bulk import (
    bounded_lassos, dsa_signature, mismatches, nba_signature, uca_signature)
from omegadp.streett import determinize_uca, lasso_member_dsa

from conftest import random_nba, random_uca


def test_bounded_lassos_count_and_order():
    words = bounded_lassos(range(2), 3)
    # cycle length 1: 2 cycles x (1 + 2 + 4) prefixes, length 2: 4 x 3,
    # length 3: 8 x 1
    assert len(words) == 2 * 7 + 4 * 3 + 8 * 1
    assert words[0].prefix == () and words[0].cycle == (0,)
    assert len(set(words)) == len(words)
    # signature order: all of the first cycle's prefixes come first
    heads = [w.cycle for w in words[:7]]
    assert heads == [(0,)] * 7


def test_nba_signature_matches_single_word_checker(rng):
    words = bounded_lassos(range(4), 4)
    for _ in range(25):
        A = random_nba(rng, rng.randint(1, 4), n_ap=2)
        sig = nba_signature(A, 4)
        ref = np.array([lasso_member_nba(A, w) for w in words])
        assert np.array_equal(sig, ref)


def test_uca_signature_matches_single_word_checker(rng):
    words = bounded_lassos(range(4), 4)
    for _ in range(25):
        A = random_uca(rng, rng.randint(1, 4), n_ap=2)
        sig = uca_signature(A, 4)
        ref = np.array([lasso_member_uca(A, w) for w in words])
        assert np.array_equal(sig, ref)


def test_limit_deterministic_path_matches_on_complements(rng):
    words = bounded_lassos(range(4), 4)
    for _ in range(10):
        A = random_uca(rng, rng.randint(1, 3), n_ap=2)
        C = complement_uca(A)
        sig = nba_signature(C, 4)
        ref = np.array([lasso_member_nba(C, w) for w in words])
        assert np.array_equal(sig, ref)


def test_dsa_signature_matches_single_word_checker(rng):
    words = bounded_lassos(range(4), 4)
    for _ in range(10):
        A = random_uca(rng, rng.randint(1, 3), n_ap=2)
        D = determinize_uca(A)
        sig = dsa_signature(D, 4)
        ref = np.array([lasso_member_dsa(D, w) for w in words])
        assert np.array_equal(sig, ref)


def test_deterministic_automaton_uses_fast_path():
    # GF(letter 1) as a two-state DBA; fully deterministic automata take
    # the limit-deterministic route with an empty first part
    ab = Alphabet(("b",))
    A = Automaton("DBA", ab, 2, 0,
                  {(0, 0): (0,), (0, 1): (1,), (1, 0): (0,), (1, 1): (1,)},
                  {(0, 1, 1), (1, 1, 1)})
    sig = nba_signature(A.reinterpret("NBA"), 5)
    words = bounded_lassos(range(2), 5)
    for w, got in zip(words, sig):
        assert got == (1 in w.cycle)


def test_mismatches_reports_differing_words(rng):
    A = random_nba(rng, 3, n_ap=1)
    sig = nba_signature(A, 3)
    flipped = sig.copy()
    flipped[5] ^= True
    bad = mismatches(sig, flipped, range(2), 3)
    assert bad == [bounded_lassos(range(2), 3)[5]]
    assert mismatches(sig, sig, range(2), 3) == []
