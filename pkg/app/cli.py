"""
Interface en ligne de commande du toolkit.

Chaque sous-commande lit des documents JSON, appelle l'agent concerné et
écrit un RunReport JSON (stdout ou --json). Codes de sortie: 0 succès,
2 usage, 3 verdict négatif, 4 entrée invalide.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import random
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from app.assembly_agent import AssemblyAgent
from app.bundling_agent import BundlingAgent, bundle_mask
from app.config import Settings
from app.delegation_agent import DelegationAgent
from app.envelope_agent import EnvelopeAgent
from app.errors import CommonAgencyError, GameInputError, InfeasibleError, PreconditionError
from app.game_model import FiniteGame, GameModelAgent, MenuProfile
from app.indirect_utility_agent import IndirectUtilityAgent
from app.log import configure, get_logger
from app.screening_agent import ScreeningAgent, ScreeningProblem
from app.serialization import clean_nan
from app.verifier_agent import VerifierAgent

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NEGATIVE = 3
EXIT_INPUT = 4

Handler = Callable[[Dict[str, Any], Settings], Tuple[dict, bool]]


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunReport:
    command: List[str]
    inputs: Dict[str, str] = field(default_factory=dict)
    output: Optional[dict] = None
    verdict: str = "pass"
    exit_code: int = EXIT_OK
    error: Optional[str] = None
    timing: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "verdict": self.verdict,
            "exit_code": self.exit_code,
            "output": self.output,
        }
        if self.error is not None:
            out["error"] = self.error
        if self.timing is not None:
            out["timing"] = {"seconds": self.timing}
        return clean_nan(out)


def exit_code_for(error: Exception) -> int:
    if isinstance(error, (PreconditionError, InfeasibleError)):
        return EXIT_NEGATIVE
    return EXIT_INPUT


# ============================================
# Commandes (documents JSON -> rapport, verdict)
# ============================================

def _game(req: Dict[str, Any]) -> FiniteGame:
    if "game" not in req:
        raise GameInputError("document de jeu requis")
    return GameModelAgent().load_game(req["game"], req.get("params"))


def _principal(game: FiniteGame, label) -> int:
    if label is None:
        raise GameInputError("principal requis")
    return game.index(str(label))


def _rival_profile(game: FiniteGame, i: int, rivals: Dict[str, Sequence[str]]) -> MenuProfile:
    raw = rivals.get("profile", rivals)
    return MenuProfile.of([[] if j == i else raw.get(p, []) for j, p in enumerate(game.principals)])


def run_solve(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    game = _game(req)
    i = _principal(game, req.get("principal"))
    rivals = _rival_profile(game, i, req.get("rivals") or {})
    agent = ScreeningAgent(settings)
    if game.principal_mode == "general":
        strategy = GameModelAgent().parse_strategy(game, req.get("strategy") or {})
        problem = ScreeningProblem(game, i, rivals, objective="general", strategy=strategy)
        solution = agent.solve_screening_general(problem)
    else:
        solution = agent.solve_screening(ScreeningProblem(game, i, rivals), method=req.get("method", "auto"))
    output = solution.to_dict(game)
    output["indirect_utility"] = IndirectUtilityAgent().indirect_utility(
        game, i, rivals, augment=game.delegated).to_dict(game)
    return output, True


def run_check(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    game = _game(req)
    model = GameModelAgent()
    mechanisms = model.parse_mechanisms(game, req.get("mechanisms") or {})
    strategy = model.parse_strategy(game, req["strategy"]) if req.get("strategy") else None
    assembly = AssemblyAgent(settings)
    variant = req.get("variant")
    report = assembly.check_compatibility(game, mechanisms, variant.upper() if variant else None, strategy)
    output = {
        "compatibility": report.to_dict(game),
        "sufficiency": assembly.check_sufficiency(game, mechanisms=mechanisms).to_dict(game),
    }
    if req.get("dump_indirect"):
        profile = MenuProfile.from_mechanisms(mechanisms)
        output["indirect_utility"] = [
            IndirectUtilityAgent().indirect_utility(game, i, profile, augment=game.delegated).to_dict(game)
            for i in range(game.n)
        ]
    return output, report.passed


def _profile_doc(req: Dict[str, Any]) -> Dict[str, Any]:
    doc = req.get("profile")
    if doc is None:
        raise GameInputError("document de profil requis")
    return doc


def run_support(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    game = _game(req)
    profile = GameModelAgent().parse_profile(game, _profile_doc(req))
    report = VerifierAgent(settings).support_feasibility(game, profile)
    return report.to_dict(game), report.feasible


def run_verify(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    """Stratégie fournie, sinon construite si UPR passe, sinon recherche de faisabilité."""
    game = _game(req)
    model = GameModelAgent()
    doc = _profile_doc(req)
    profile = model.parse_profile(game, doc)
    verifier = VerifierAgent(settings)
    strategy_doc = req.get("strategy") or doc.get("strategy")
    if strategy_doc:
        strategy = model.parse_strategy(game, strategy_doc)
        cert = verifier.verify_pbe(game, profile, strategy)
        return {"route": "given-strategy", "certificate": cert.to_dict(game)}, cert.is_pbe
    if doc.get("mechanisms"):
        mechanisms = model.parse_mechanisms(game, doc["mechanisms"])
        report = AssemblyAgent(settings).check_compatibility(game, mechanisms)
        if report.passed:
            strategy = verifier.construct_agent_strategy(game, mechanisms)
            cert = verifier.verify_pbe(game, profile, strategy)
            return {"route": "constructed-strategy", "compatibility": report.to_dict(game),
                    "certificate": cert.to_dict(game)}, cert.is_pbe
        logger.info(f"⚠ {report.variant} en échec: recherche d'une stratégie de soutien")
    feasibility = verifier.support_feasibility(game, profile)
    output = {"route": "support-feasibility", "feasibility": feasibility.to_dict(game)}
    if feasibility.feasible:
        cert = verifier.verify_pbe(game, profile, feasibility.strategy)
        output["certificate"] = cert.to_dict(game)
        return output, cert.is_pbe
    return output, False


def run_find_equilibria(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    game = _game(req)
    start = GameModelAgent().parse_profile(game, req["start"]) if req.get("start") else None
    found = AssemblyAgent(settings).find_p3_induced_profiles(
        game, mode=req.get("mode", "exhaustive"), start=start, max_rounds=int(req.get("max_rounds", 100)))
    output = {"profiles": [p.to_dict(game) for p in found], "count": len(found),
              "compatible": sum(p.passed for p in found)}
    return output, any(p.passed for p in found)


def run_pareto(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    game = _game(req)
    model = GameModelAgent()
    assembly = AssemblyAgent(settings)
    entries = []
    for doc in req.get("entries") or []:
        entries.append((model.parse_profile(game, doc), model.parse_strategy(game, doc.get("strategy") or {})))
    if len(entries) < 2:
        raise GameInputError("au moins deux entrées (profil, stratégie) requises")
    report = assembly.pareto_compare(game, entries, verify=bool(req.get("verify")))
    classes = []
    for profile, strategy in entries:
        try:
            classes.append(assembly.classify_pbe(game, profile, strategy, strict=not req.get("heuristic")).to_dict(game))
        except PreconditionError as e:
            logger.warning(f"⚠ Classification refusée: {e}")
            classes.append(None)
    output = report.to_dict(game)
    output["classification"] = classes
    return output, True


def run_delegation(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    agent = DelegationAgent(settings)
    model = agent.load_model(req.get("model"))
    spec = agent.load_spec(req.get("spec"))
    action = req.get("action", "check")
    if action == "check":
        report = agent.check_regime(model, spec)
        return report.to_dict(), report.passed
    if action == "build":
        profile = agent.build_delegation_profile(model, spec)
        output = profile.to_dict()
        output["envelope_slack"] = agent.envelope_slack(model, spec).to_dict()
        return output, True
    if action == "xval":
        result = agent.cross_validate_discretized(model, spec, int(req.get("n_types", 9)), int(req.get("n_outcomes", 17)))
        return result.to_dict(), result.found
    raise GameInputError(f"action de délégation inconnue: {action}")


def _bundle(model, goods) -> int:
    if goods is None:
        raise GameInputError("bundle de base requis")
    return bundle_mask(goods, model.r)


def run_bundling(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    agent = BundlingAgent(settings)
    model = agent.load_model(req.get("model"))
    action = req.get("action", "tstar")
    if action == "tstar":
        variant = "market_split" if req.get("base") is None else _bundle(model, req["base"])
        return agent.find_tstar(model, variant).to_dict(), True
    if action == "pairs":
        report = agent.jointly_optimal_pairs(model)
        return report.to_dict(model), bool(report.pairs)
    if action == "split-check":
        menu1 = agent.load_menu(model, req.get("menu1"))
        menu2 = agent.load_menu(model, req.get("menu2"))
        report = agent.check_market_splitting(model, menu1, menu2)
        output = report.to_dict()
        if report.passed:
            output["audit"] = agent.audit_market_split(model, menu1, menu2).to_dict()
        return output, report.passed
    if action == "build-split":
        bundles = [_bundle(model, goods) for goods in req.get("bundles") or []]
        if not bundles:
            raise GameInputError("au moins un bundle pour la firme 1")
        menu1, menu2 = agent.build_market_split(model, bundles)
        audit = agent.audit_market_split(model, menu1, menu2)
        return {"menu1": menu1.to_dict(model), "menu2": menu2.to_dict(model), "audit": audit.to_dict()}, audit.passed
    if action == "build-upgrades":
        base = _bundle(model, req.get("base"))
        result = agent.build_base_plus_upgrades(model, base)
        audit = agent.audit_upgrades(model, result)
        output = result.to_dict(model)
        output["audit"] = audit.to_dict()
        output["nondegeneracy"] = agent.check_nondegeneracy(model, base)
        return output, audit.passed
    if action == "mdstar":
        report = agent.check_md_star(model, _bundle(model, req.get("base")))
        return report.to_dict(model), report.passed
    raise GameInputError(f"action de bundling inconnue: {action}")


def run_envelope(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    agent = EnvelopeAgent(settings)
    if req.get("family") is not None:
        family = agent.load_family(req["family"])
    elif req.get("seed") is not None:
        family = agent.random_polynomial_family(int(req["seed"]))
    else:
        raise GameInputError("famille ou graine requise")
    if req.get("lower"):
        audit = agent.lower_envelope(family)
        kinks = agent.kink_audit(audit)
        return {"envelope": audit.to_dict(), "kink_audit": kinks.to_dict(family.names)}, kinks.passed
    output = agent.audit_family(family)
    return output, output["status"] == "pass"


# ============================================
# Batteries aléatoires
# ============================================

def _random_rivals(game: FiniteGame, i: int, rng: random.Random) -> MenuProfile:
    menus = []
    for j, outs in enumerate(game.outcomes):
        if j == i:
            menus.append([])
            continue
        size = rng.randint(1, len(outs))
        menus.append(rng.sample(list(outs), size))
    return MenuProfile.of(menus)


def oracle_battery(seed: int, count: int, settings: Settings) -> dict:
    """Valeur de solve_screening contre l'oracle exhaustif sur des jeux aléatoires."""
    rng = random.Random(seed)
    screening = ScreeningAgent(settings)
    model = GameModelAgent()
    failures = []
    for case in range(count):
        game = model.random_game(rng.randrange(10 ** 9), n_principals=rng.randint(2, 3),
                                 n_types=rng.randint(1, 3), n_outcomes=rng.randint(1, 3))
        i = rng.randrange(game.n)
        problem = ScreeningProblem(game, i, _random_rivals(game, i, rng))
        solved = screening.solve_screening(problem).value
        oracle = screening.brute_force_screening(problem)
        if solved != oracle:
            failures.append({"case": case, "game": game.name, "principal": game.principals[i],
                             "solved": solved, "oracle": oracle})
    return {"kind": "oracle", "seed": seed, "count": count, "passed": count - len(failures),
            "rate": (count - len(failures)) / count if count else 1.0, "failures": failures}


def soundness_battery(seed: int, count: int, settings: Settings) -> dict:
    """Jeux additivement séparables: tout profil mutuel passe UPR et est certifié PBE."""
    rng = random.Random(seed)
    model = GameModelAgent()
    assembly = AssemblyAgent(settings)
    verifier = VerifierAgent(settings)
    failures, profiles = [], 0
    for case in range(count):
        game = model.random_game(rng.randrange(10 ** 9), n_principals=2, n_types=rng.randint(1, 3),
                                 n_outcomes=rng.randint(1, 3), separable=True)
        for p3 in assembly.find_p3_induced_profiles(game):
            profiles += 1
            if not p3.passed:
                failures.append({"case": case, "game": game.name, "reason": "UPR"})
                continue
            strategy = verifier.construct_agent_strategy(game, p3.mechanisms)
            cert = verifier.verify_pbe(game, p3.menus, strategy)
            if not cert.is_pbe:
                failures.append({"case": case, "game": game.name, "reason": cert.verdict})
    bad_cases = len({f["case"] for f in failures})
    return {"kind": "soundness", "seed": seed, "count": count, "profiles": profiles,
            "passed": count - bad_cases, "rate": (count - bad_cases) / count if count else 1.0,
            "failures": failures}


def run_battery(req: Dict[str, Any], settings: Settings) -> Tuple[dict, bool]:
    kind = req.get("kind", "oracle")
    runner = {"oracle": oracle_battery, "soundness": soundness_battery}.get(kind)
    if runner is None:
        raise GameInputError(f"batterie inconnue: {kind}")
    result = runner(int(req.get("seed", 0)), int(req.get("count", 10)), settings)
    logger.info(f"📊 Batterie {kind}: {result['passed']}/{result['count']}")
    return result, not result["failures"]


COMMANDS: Dict[str, Handler] = {
    "solve": run_solve,
    "check": run_check,
    "verify": run_verify,
    "support": run_support,
    "find-equilibria": run_find_equilibria,
    "pareto": run_pareto,
    "delegation": run_delegation,
    "bundling": run_bundling,
    "envelope-audit": run_envelope,
    "battery": run_battery,
}


# ============================================
# Analyse des arguments
# ============================================

def _param(text: str) -> Tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise argparse.ArgumentTypeError(f"paramètre attendu sous la forme nom=num/den: {text!r}")
    return name.strip(), value.strip()


def _goods(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"liste de biens attendue (ex: 1,2): {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=None, help="processus de calcul (défaut: CA_JOBS ou 1)")
    common.add_argument("--json", type=Path, default=None, help="écrit le rapport dans ce fichier")
    common.add_argument("--quiet", action="store_true", help="n'affiche que les avertissements")
    common.add_argument("--no-timing", action="store_true", help="rapport sans durée (octet-déterministe)")

    game = argparse.ArgumentParser(add_help=False, parents=[common])
    game.add_argument("--game", type=Path, required=True)
    game.add_argument("--param", type=_param, action="append", default=[], help="paramètre nom=num/den")

    parser = _Parser(prog="common-agency", description="Solveur et vérificateur de jeux de menus en agence commune.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", parents=[game])
    p.add_argument("--principal", required=True)
    p.add_argument("--rivals", type=Path, required=True)
    p.add_argument("--method", choices=["auto", "menus", "search"], default="auto")
    p.add_argument("--strategy", type=Path)

    p = sub.add_parser("check", parents=[game])
    p.add_argument("--mechanisms", type=Path, required=True)
    p.add_argument("--variant", choices=["upr", "upr-i", "upr-d", "upnr", "men"])
    p.add_argument("--strategy", type=Path)
    p.add_argument("--dump-indirect", action="store_true")

    for name in ("verify", "support"):
        p = sub.add_parser(name, parents=[game])
        p.add_argument("--profile", type=Path, required=True)
        if name == "verify":
            p.add_argument("--strategy", type=Path)

    p = sub.add_parser("find-equilibria", parents=[game])
    p.add_argument("--mode", choices=["exhaustive", "iterate"], default="exhaustive")
    p.add_argument("--start", type=Path)
    p.add_argument("--max-rounds", type=int, default=100)

    p = sub.add_parser("pareto", parents=[game])
    p.add_argument("--entries", type=Path, nargs="+", required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--heuristic", action="store_true", help="classification sans non-indifférence")

    p = sub.add_parser("delegation", parents=[common])
    p.add_argument("action", choices=["check", "build", "xval"])
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--spec", type=Path, required=True)
    p.add_argument("--types", dest="n_types", type=int, default=9)
    p.add_argument("--outcomes", dest="n_outcomes", type=int, default=17)

    p = sub.add_parser("bundling", parents=[common])
    p.add_argument("action", choices=["tstar", "pairs", "split-check", "build-split", "build-upgrades", "mdstar"])
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--base", type=_goods)
    p.add_argument("--menu1", type=Path)
    p.add_argument("--menu2", type=Path)
    p.add_argument("--bundle", dest="bundles", type=_goods, action="append", default=[])

    p = sub.add_parser("envelope-audit", parents=[common])
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--family", type=Path)
    source.add_argument("--seed", type=int)
    p.add_argument("--lower", action="store_true", help="audite l'enveloppe inférieure (contre-exemple)")

    p = sub.add_parser("battery", parents=[common])
    p.add_argument("--kind", choices=["oracle", "soundness"], required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    return parser


_FILE_ARGS = ("game", "rivals", "strategy", "mechanisms", "profile", "start", "model", "spec", "menu1", "menu2", "family")
_OPTION_ARGS = ("principal", "method", "variant", "dump_indirect", "mode", "max_rounds", "verify", "heuristic",
                "action", "n_types", "n_outcomes", "base", "bundles", "seed", "lower", "kind", "count")


def _read_json(path: Path) -> Any:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise GameInputError(f"{path}: JSON invalide ({e})")


def _request(args: argparse.Namespace, report: RunReport) -> Dict[str, Any]:
    req: Dict[str, Any] = {}
    for name in _FILE_ARGS:
        path = getattr(args, name, None)
        if path is not None:
            report.inputs[str(path)] = file_digest(path)
            req[name] = _read_json(path)
    entries = getattr(args, "entries", None)
    if entries:
        req["entries"] = []
        for path in entries:
            report.inputs[str(path)] = file_digest(path)
            req["entries"].append(_read_json(path))
    for name in _OPTION_ARGS:
        value = getattr(args, name, None)
        if value is not None:
            req[name] = value
    if getattr(args, "param", None):
        req["params"] = dict(args.param)
    return req


def _emit(report: RunReport, target: Optional[Path]) -> None:
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
    if target is None:
        print(text)
        return
    target.write_text(text + "\n", encoding="utf-8")
    print(f"{report.command[0]}: {report.verdict} (exit {report.exit_code})")


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Exécute une sous-commande et écrit son RunReport.

    Args:
        argv: arguments (défaut: sys.argv[1:])

    Returns:
        code de sortie (0, 2, 3 ou 4)
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        settings = Settings.from_env(jobs=args.jobs, log_level="WARNING" if args.quiet else None)
    except ValueError as e:
        print(f"✗ configuration invalide: {e}", file=sys.stderr)
        return EXIT_USAGE
    configure(settings.log_level)

    report = RunReport(command=argv)
    started = time.perf_counter()
    try:
        req = _request(args, report)
        output, passed = COMMANDS[args.command](req, settings)
        report.output = output
        report.verdict = "pass" if passed else "fail"
        report.exit_code = EXIT_OK if passed else EXIT_NEGATIVE
    except CommonAgencyError as e:
        report.verdict = "error"
        report.error = str(e)
        report.exit_code = exit_code_for(e)
        logger.error(f"✗ {e}")
    except OSError as e:
        report.verdict = "error"
        report.error = f"fichier illisible: {e}"
        report.exit_code = EXIT_INPUT
        logger.error(f"✗ {report.error}")
    if not args.no_timing:
        report.timing = round(time.perf_counter() - started, 6)
    _emit(report, args.json)
    return report.exit_code


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
