import math

import numpy as np
import pytest

from tidyplan import kernels
from tidyplan.mcts import (
    Edge,
    PlannerModels,
    SearchConfig,
    TreeNode,
    backpropagate,
    episode_loop,
    expand,
    plan_episode,
    search,
    simulate,
    uct_select,
)
from tidyplan.world import ActionSpec, Scene, Workspace, apply_action

from conftest import square


def act(obj_id, xi, yi, r=0):
    return ActionSpec(object_id=obj_id, cell=(xi, yi), rotation_bin=r)


def one_cup_scene(x=0.1, y=0.1):
    # 2x2 cells over 0.4x0.4m, single rotation bin: four placements, all legal
    ws = Workspace(width_m=0.4, depth_m=0.4, grid_h=2, grid_w=2, rotation_bins=1)
    return Scene(ws, (square(1, x, y, half=0.03),), "mixed")


def uniform_sampler(scene: Scene, rng: np.random.Generator) -> ActionSpec:
    ws = scene.workspace
    p = scene.packed
    mask = kernels.placement_mask(
        p.poses, p.half, p.support, ws.width_m, ws.depth_m, ws.grid_h, ws.grid_w, ws.rotation_bins
    )
    flat = np.flatnonzero(mask.ravel())
    if flat.size == 0:
        raise ValueError("no feasible action")
    n, xi, yi, r = np.unravel_index(int(rng.choice(flat)), mask.shape)
    return ActionSpec(object_id=int(p.ids[n]), cell=(int(xi), int(yi)), rotation_bin=int(r))


def target_cell_models(target=(1, 1)):
    """Score 1 when the lone object sits in the target cell, else 0."""

    def score_fn(scene: Scene) -> float:
        o = scene.objects[0]
        return 1.0 if scene.workspace.cell_of(o.pose[0], o.pose[1]) == target else 0.0

    return PlannerModels(score_fn=score_fn, sampler=uniform_sampler)


class TestUctSelect:
    def node_with(self, edges):
        node = TreeNode(scene=one_cup_scene())
        for a, visits, value_sum in edges:
            node.edges[a] = Edge(child=TreeNode(scene=node.scene), visits=visits, value_sum=value_sum)
        node.visits = 1 + sum(v for _, v, _ in edges)
        return node

    def test_zero_exploration_picks_best_mean(self):
        node = self.node_with([(act(1, 0, 0), 4, 3.6), (act(1, 1, 1), 1, 0.3)])
        assert uct_select(node, 0.0) == act(1, 0, 0)

    def test_exploration_bonus_flips_choice(self):
        # mean 0.9 vs 0.3, but the once-tried edge wins the sqrt bonus at c=1
        node = self.node_with([(act(1, 0, 0), 4, 3.6), (act(1, 1, 1), 1, 0.3)])
        node.visits = 8
        assert uct_select(node, 1.0) == act(1, 1, 1)
        a = 3.6 / 4 + math.sqrt(2 * math.log(8) / 4)
        b = 0.3 / 1 + math.sqrt(2 * math.log(8) / 1)
        assert b > a

    def test_unvisited_edge_first(self):
        node = self.node_with([(act(1, 0, 0), 5, 5.0), (act(1, 1, 0), 0, 0.0)])
        assert uct_select(node, 1.0) == act(1, 1, 0)

    def test_unvisited_ties_lowest_key(self):
        node = self.node_with([(act(2, 0, 0), 0, 0.0), (act(1, 1, 1), 0, 0.0)])
        assert uct_select(node, 1.0) == act(1, 1, 1)

    def test_equal_scores_tie_to_lowest_key(self):
        node = self.node_with([(act(2, 0, 0), 2, 1.0), (act(1, 1, 1), 2, 1.0)])
        assert uct_select(node, 1.0) == act(1, 1, 1)

    def test_leaf_node(self):
        with pytest.raises(ValueError, match="leaf node"):
            uct_select(TreeNode(scene=one_cup_scene()), 1.0)


class TestExpand:
    def fixed_sampler(self, actions):
        it = iter(actions)

        def sampler(scene, rng):
            return next(it)

        return sampler

    def test_adds_one_child(self):
        scene = one_cup_scene()
        node = TreeNode(scene=scene)
        models = PlannerModels(score_fn=lambda s: 0.0, sampler=self.fixed_sampler([act(1, 1, 1)]))
        child = expand(node, models, width=8, rng_seed=0)
        assert child is not None and child.visits == 1
        assert list(node.edges) == [act(1, 1, 1)]
        assert node.edges[act(1, 1, 1)].visits == 0
        assert child.scene == apply_action(scene, act(1, 1, 1))
        assert not node.fully_expanded

    def test_width_budget(self):
        node = TreeNode(scene=one_cup_scene())
        for k in range(3):
            node.edges[act(1, k % 2, k // 2)] = Edge(child=TreeNode(scene=node.scene))
        models = PlannerModels(score_fn=lambda s: 0.0, sampler=self.fixed_sampler([]))
        assert expand(node, models, width=3, rng_seed=0) is None
        assert node.fully_expanded

    def test_duplicate_proposals_exhaust(self):
        node = TreeNode(scene=one_cup_scene())
        node.edges[act(1, 0, 0)] = Edge(child=TreeNode(scene=node.scene))
        models = PlannerModels(score_fn=lambda s: 0.0, sampler=lambda s, r: act(1, 0, 0))
        assert expand(node, models, width=8, rng_seed=0) is None
        assert node.fully_expanded

    def test_no_feasible_action_closes_node(self):
        def sampler(scene, rng):
            raise ValueError("no feasible action")

        node = TreeNode(scene=one_cup_scene())
        models = PlannerModels(score_fn=lambda s: 0.0, sampler=sampler)
        assert expand(node, models, width=8, rng_seed=0) is None
        assert node.fully_expanded

    def test_other_sampler_errors_propagate(self):
        def sampler(scene, rng):
            raise ValueError("checkpoint missing")

        node = TreeNode(scene=one_cup_scene())
        models = PlannerModels(score_fn=lambda s: 0.0, sampler=sampler)
        with pytest.raises(ValueError, match="checkpoint missing"):
            expand(node, models, width=8, rng_seed=0)


class NoRollout:
    def __call__(self, scene, rng):
        raise AssertionError("sampler must not run")


class TestSimulate:
    def test_start_above_threshold_short_circuits(self):
        node = TreeNode(scene=one_cup_scene(0.3, 0.3))
        models = PlannerModels(score_fn=lambda s: 0.9, sampler=NoRollout())
        assert simulate(node, models, rollout_horizon=5, threshold=0.85, rng_seed=0) == (0.9, 1)

    def test_zero_horizon_no_rollout(self):
        node = TreeNode(scene=one_cup_scene())
        models = PlannerModels(score_fn=lambda s: 0.2, sampler=NoRollout())
        assert simulate(node, models, rollout_horizon=0, threshold=0.85, rng_seed=0) == (0.2, 0)

    def test_rollout_can_reach_threshold(self):
        models = target_cell_models()
        node = TreeNode(scene=one_cup_scene(0.1, 0.1))
        v, z = simulate(node, models, rollout_horizon=50, threshold=0.85, rng_seed=3)
        assert v == 0.0 and z == 1

    def test_stranded_rollout_returns_zero(self):
        def sampler(scene, rng):
            raise ValueError("no feasible action")

        node = TreeNode(scene=one_cup_scene())
        models = PlannerModels(score_fn=lambda s: 0.2, sampler=sampler)
        assert simulate(node, models, rollout_horizon=5, threshold=0.85, rng_seed=0) == (0.2, 0)

    def test_deterministic(self):
        models = target_cell_models()
        node = TreeNode(scene=one_cup_scene())
        a = simulate(node, models, rollout_horizon=5, threshold=0.85, rng_seed=11)
        b = simulate(node, models, rollout_horizon=5, threshold=0.85, rng_seed=11)
        assert a == b

    def test_success_rate_matches_enumeration(self):
        # each rollout step re-places the cup uniformly over 4 cells, so the
        # chance of ever seeing the target within h steps is 1 - (3/4)^h
        models = target_cell_models()
        h = 5
        hits = sum(
            simulate(TreeNode(scene=one_cup_scene()), models, h, 0.85, rng_seed=k)[1]
            for k in range(10_000)
        )
        expect = 1.0 - (3.0 / 4.0) ** h
        assert abs(hits / 10_000 - expect) < 0.02


class TestBackpropagate:
    def chain(self):
        root = TreeNode(scene=one_cup_scene())
        mid = TreeNode(scene=root.scene)
        leaf = TreeNode(scene=root.scene)
        root.edges[act(1, 0, 0)] = Edge(child=mid)
        mid.edges[act(1, 1, 1)] = Edge(child=leaf)
        return root, mid, leaf

    def test_mixed_gain_added_everywhere(self):
        root, mid, leaf = self.chain()
        path = [(root, act(1, 0, 0)), (mid, act(1, 1, 1))]
        backpropagate(path, v=0.8, z=1, mixing=0.3, expanded=leaf)
        gain = (1.0 - 0.3) * 0.8 + 0.3 * 1
        assert math.isclose(gain, 0.86, abs_tol=1e-12)
        for node, a in path:
            assert node.edges[a].visits == 1
            assert node.edges[a].value_sum == gain
        assert root.visits == 2 and mid.visits == 2 and leaf.visits == 1

    def test_pure_value_when_mixing_zero(self):
        root, mid, leaf = self.chain()
        backpropagate([(root, act(1, 0, 0))], v=0.45, z=1, mixing=0.0, expanded=None)
        assert root.edges[act(1, 0, 0)].value_sum == 0.45

    def test_untouched_edges_unchanged(self):
        root, mid, leaf = self.chain()
        root.edges[act(1, 1, 0)] = Edge(child=TreeNode(scene=root.scene), visits=3, value_sum=1.5)
        backpropagate([(root, act(1, 0, 0))], v=0.5, z=0, mixing=0.3, expanded=None)
        other = root.edges[act(1, 1, 0)]
        assert other.visits == 3 and other.value_sum == 1.5

    def test_expanded_node_keeps_creation_visit(self):
        root, mid, leaf = self.chain()
        backpropagate([(root, act(1, 0, 0)), (mid, act(1, 1, 1))], 0.5, 0, 0.3, expanded=leaf)
        assert leaf.visits == 1


def tree_invariant(root: TreeNode) -> None:
    stack = [root]
    while stack:
        node = stack.pop()
        assert node.visits == 1 + sum(e.visits for e in node.edges.values())
        stack.extend(e.child for e in node.edges.values())


class TestSearch:
    def test_single_iteration_tree(self):
        models = target_cell_models()
        visits_seen = []
        action, stats = search(
            one_cup_scene(),
            models,
            SearchConfig(iterations=1, rollout_horizon=0),
            rng_seed=0,
            on_iteration=lambda root: visits_seen.append(root.visits),
        )
        assert visits_seen == [2]
        assert stats.root_visits == 2
        assert sum(stats.edge_visits.values()) == 1
        assert stats.edge_visits[action] == 1

    def test_visit_count_invariant_holds_every_iteration(self):
        models = target_cell_models()
        search(
            one_cup_scene(),
            models,
            SearchConfig(iterations=300, width=3, rollout_horizon=2),
            rng_seed=5,
            on_iteration=tree_invariant,
        )

    def test_deterministic(self):
        models = target_cell_models()
        cfg = SearchConfig(iterations=80, width=4, rollout_horizon=2)
        a1, s1 = search(one_cup_scene(), models, cfg, rng_seed=9)
        a2, s2 = search(one_cup_scene(), models, cfg, rng_seed=9)
        assert a1 == a2
        assert s1.edge_visits == s2.edge_visits and s1.edge_means == s2.edge_means

    def test_finds_scoring_cell(self):
        # with no exploration bonus the scoring edge's mean stays strictly
        # above the all-zero alternatives, so it soaks up every visit
        models = target_cell_models(target=(1, 0))
        action, _ = search(
            one_cup_scene(0.1, 0.3),
            models,
            SearchConfig(iterations=120, rollout_horizon=0, exploration=0.0, width=4),
            rng_seed=0,
        )
        assert action == act(1, 1, 0)

    def test_visit_tie_breaks_lexicographic(self):
        proposals = iter([act(1, 1, 1), act(1, 0, 1)])
        models = PlannerModels(score_fn=lambda s: 0.5, sampler=lambda s, r: next(proposals))
        action, stats = search(
            one_cup_scene(), models, SearchConfig(iterations=2, rollout_horizon=0), rng_seed=0
        )
        assert set(stats.edge_visits.values()) == {1}
        assert action == act(1, 0, 1)

    def test_stuck_when_nothing_feasible(self):
        ws = Workspace(0.12, 0.12, 2, 2, 1)
        scene = Scene(ws, (square(1, 0.05, 0.06), square(2, 0.07, 0.06)), "mixed")
        with pytest.raises(ValueError, match="stuck"):
            search(scene, target_cell_models(), SearchConfig(iterations=4), rng_seed=0)


class TestSearchConfig:
    def test_rejects_zero_iterations(self):
        with pytest.raises(ValueError, match="iterations"):
            SearchConfig(iterations=0)

    @pytest.mark.parametrize("mixing", [-0.1, 1.1])
    def test_rejects_mixing_outside_unit(self, mixing):
        with pytest.raises(ValueError, match="mixing"):
            SearchConfig(mixing=mixing)

    @pytest.mark.parametrize("threshold", [0.0, 1.0])
    def test_rejects_degenerate_threshold(self, threshold):
        with pytest.raises(ValueError, match="threshold"):
            SearchConfig(threshold=threshold)


class TestEpisodeLoop:
    def test_already_tidy(self):
        def never_act(scene, step):
            raise AssertionError("act must not run")

        result = episode_loop(one_cup_scene(), lambda s: 0.95, never_act, threshold=0.85)
        assert result.status == "success"
        assert result.length == 0 and len(result.trajectory) == 1
        assert result.final_score == 0.95

    def test_zero_budget_times_out(self):
        def never_act(scene, step):
            raise AssertionError("act must not run")

        result = episode_loop(one_cup_scene(), lambda s: 0.1, never_act, threshold=0.85, max_steps=0)
        assert result.status == "failure:timeout" and result.length == 0

    def test_stuck_action_chooser(self):
        def act_fn(scene, step):
            raise ValueError("stuck")

        result = episode_loop(one_cup_scene(), lambda s: 0.1, act_fn, threshold=0.85)
        assert result.status == "failure:stuck"

    def test_collision_aborts(self):
        ws = Workspace(1.0, 1.0, 10, 10, 4)
        scene = Scene(ws, (square(1, 0.25, 0.25), square(2, 0.75, 0.75)), "mixed")

        def act_fn(s, step):
            return ActionSpec(object_id=1, cell=ws.cell_of(0.75, 0.75), rotation_bin=0)

        result = episode_loop(scene, lambda s: 0.1, act_fn, threshold=0.85)
        assert result.status == "failure:collision"
        assert result.length == 1

    def test_out_of_bounds_aborts(self):
        ws = Workspace(1.0, 1.0, 10, 10, 4)
        scene = Scene(ws, (square(1, 0.5, 0.5, half=0.3),), "mixed")

        def act_fn(s, step):
            return ActionSpec(object_id=1, cell=(0, 0), rotation_bin=0)

        result = episode_loop(scene, lambda s: 0.1, act_fn, threshold=0.85)
        assert result.status == "failure:out-of-bounds"

    def test_success_after_steps(self):
        models = target_cell_models(target=(1, 1))

        def act_fn(s, step):
            return act(1, 1, 1)

        result = episode_loop(one_cup_scene(0.1, 0.1), models.score_fn, act_fn, threshold=0.85)
        assert result.status == "success"
        assert result.length == 1
        assert result.final_score == 1.0
        assert [round(sc) for _, sc in result.trajectory] == [0, 1]


class TestPlanEpisode:
    def test_already_tidy_short_circuits(self):
        models = PlannerModels(score_fn=lambda s: 0.99, sampler=NoRollout())
        result = plan_episode(one_cup_scene(), models)
        assert result.status == "success" and result.length == 0

    def test_zero_budget(self):
        models = target_cell_models()
        result = plan_episode(one_cup_scene(), models, max_steps=0)
        assert result.status == "failure:timeout"

    def test_oracle_models_reach_success(self):
        models = target_cell_models(target=(0, 1))
        cfg = SearchConfig(iterations=60, width=4, rollout_horizon=1)
        result = plan_episode(one_cup_scene(0.1, 0.1), models, cfg, rng_seed=1, max_steps=5)
        assert result.status == "success"
        assert result.final_score == 1.0
        assert result.length >= 1

    def test_deterministic(self):
        models = target_cell_models()
        cfg = SearchConfig(iterations=40, width=4, rollout_horizon=1)
        a = plan_episode(one_cup_scene(), models, cfg, rng_seed=7, max_steps=4)
        b = plan_episode(one_cup_scene(), models, cfg, rng_seed=7, max_steps=4)
        assert a.status == b.status and a.length == b.length
        assert [s for _, s in a.trajectory] == [s for _, s in b.trajectory]
