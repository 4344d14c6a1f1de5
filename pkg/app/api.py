# app/api.py
"""
API Flask du toolkit d'agence commune.
Endpoints pour:
- Screening, compatibilité, vérification de PBE, faisabilité
- Profils induits et comparaison de Pareto
- Délégation, bundling et enveloppes (applications continues)
Les corps de requête reprennent les documents JSON de la CLI, en ligne.
"""

from flask import Flask, request, jsonify
from flask_cors import CORS

from app.cli import COMMANDS
from app.config import Settings
from app.errors import CommonAgencyError, GameInputError, InfeasibleError, PreconditionError
from app.log import configure, get_logger
from app.serialization import clean_nan

logger = get_logger(__name__)

app = Flask(__name__)
CORS(app)

# ============================================
# Initialisation
# ============================================
settings = Settings.from_env()
configure(settings.log_level)
logger.info("✓ Agents prêts (jobs=%d, tolérances %.0e / %.0e)", settings.jobs, settings.tol_analytic, settings.tol_sampled)


# ============================================
# Utilitaires
# ============================================

def _status_for(error: Exception) -> int:
    if isinstance(error, GameInputError):
        return 400
    if isinstance(error, (PreconditionError, InfeasibleError)):
        return 422
    return 500


def _run(command: str, extra: dict = None):
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        return jsonify({"error": "corps JSON (objet) requis"}), 400
    req = dict(data)
    req.update(extra or {})
    try:
        output, passed = COMMANDS[command](req, settings)
    except CommonAgencyError as e:
        logger.warning(f"⚠ /api/{command}: {e}")
        return jsonify({"error": str(e)}), _status_for(e)
    except Exception as e:
        logger.error(f"✗ /api/{command}: {e}")
        return jsonify({"error": str(e)}), 500
    return jsonify(clean_nan({"verdict": "pass" if passed else "fail", "output": output}))


# ============================================
# ENDPOINTS (jeux finis)
# ============================================

@app.route('/api/solve', methods=['POST'])
def solve():
    """Programme de screening d'un principal face aux menus rivaux."""
    return _run("solve")


@app.route('/api/check', methods=['POST'])
def check():
    """Compatibilité (UPR, UPR-I, UPR-D, UPNR, MEN) et conditions suffisantes."""
    return _run("check")


@app.route('/api/verify', methods=['POST'])
def verify():
    return _run("verify")


@app.route('/api/support', methods=['POST'])
def support():
    return _run("support")


@app.route('/api/find-equilibria', methods=['POST'])
def find_equilibria():
    return _run("find-equilibria")


@app.route('/api/pareto', methods=['POST'])
def pareto():
    return _run("pareto")


# ============================================
# ENDPOINTS (applications continues)
# ============================================

@app.route('/api/delegation/<action>', methods=['POST'])
def delegation(action):
    """Conditions de régime, construction du profil, validation croisée."""
    return _run("delegation", {"action": action})


@app.route('/api/bundling/<action>', methods=['POST'])
def bundling(action):
    return _run("bundling", {"action": action})


@app.route('/api/envelope-audit', methods=['POST'])
def envelope_audit():
    return _run("envelope-audit")


@app.route('/api/health', methods=['GET'])
def health():
    return jsonify({"status": "ok", "commands": sorted(COMMANDS)})


if __name__ == '__main__':
    print("\n" + "=" * 50)
    print("🌐 Common Agency API Server")
    print("=" * 50)
    print("\n📍 Endpoints disponibles:")
    print("   POST /api/solve              - Screening d'un principal")
    print("   POST /api/check              - Compatibilité UPR")
    print("   POST /api/verify             - Vérification de PBE")
    print("   POST /api/support            - Faisabilité d'une stratégie")
    print("   POST /api/find-equilibria    - Profils induits")
    print("   POST /api/pareto             - Comparaison de Pareto")
    print("   POST /api/delegation/<action> - check | build | xval")
    print("   POST /api/bundling/<action>  - tstar | pairs | split-check | build-split | build-upgrades | mdstar")
    print("   POST /api/envelope-audit     - Audit d'enveloppe")
    print("   GET  /api/health             - Health check")
    print("\n")

    app.run(debug=True, port=settings.api_port)
