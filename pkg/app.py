from flask import Flask, request, jsonify
from flask_cors import CORS
from werkzeug.exceptions import HTTPException
import logging
from datetime import datetime

from gengauss import __version__
from gengauss.cli import (
    check_job, converge_job, integrate_job, levelset_job, parse_point, parse_schedule,
    rule_job, spline_job,
)
from gengauss.utils.config import DEFAULT_RESOLUTION, DEFAULT_SPLINE_SAMPLES
from gengauss.utils.errors import DomainError, GenGaussError, NumericError
from gengauss.utils.export import to_jsonable
from gengauss.utils.precision import Precision

logger = logging.getLogger(__name__)

# --- 1. Initialization ---
app = Flask(__name__)
CORS(app)

ENDPOINTS = ['rule', 'check', 'integrate', 'levelset', 'converge', 'spline']


# --- Utility Functions ---

def get_field(data, name, cast=None, default=None, required=False):
    """Read a request field by its CLI flag name (dashes or underscores)."""
    value = data.get(name, data.get(name.replace('_', '-')))
    if value is None:
        if required:
            raise DomainError(f"missing field '{name}'")
        return default
    if cast is None:
        return value
    try:
        return cast(value)
    except (TypeError, ValueError) as e:
        raise DomainError(f"bad value for '{name}': {value!r}") from e


def get_precision(data):
    name = get_field(data, 'precision')
    return Precision.parse(name) if name else None


def request_data():
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise DomainError('request body must be a JSON object')
    return data


def error_response(e):
    if isinstance(e, DomainError):
        status = 400
    elif isinstance(e, NumericError):
        status = 422
    else:
        status = 500
    code = e.code if isinstance(e, GenGaussError) else 'server_error'
    logger.error("%s failed: %s", request.path, e)
    return jsonify({'error': code, 'message': str(e)}), status


@app.errorhandler(Exception)
def handle_error(e):
    if isinstance(e, HTTPException):
        return e
    return error_response(e)


# --- 2. Endpoints ---

@app.route('/rule', methods=['POST'])
def rule():
    """Nodes and weights of Q_{n,r,s}, with its check summary."""
    data = request_data()
    built, checks = rule_job(get_field(data, 'measure', str, required=True),
                             get_field(data, 'a', float), get_field(data, 'r', int, 0),
                             get_field(data, 'b', float), get_field(data, 's', int, 0),
                             get_field(data, 'n', int, required=True), get_precision(data))
    return jsonify(to_jsonable({'rule': built.to_dict(), 'checks': checks}))


@app.route('/check', methods=['POST'])
def check():
    data = request_data()
    table = check_job(get_field(data, 'measure', str, required=True), get_field(data, 'rule'),
                      get_field(data, 'n_max', int, 0), get_field(data, 'r_max', int, 0),
                      get_field(data, 's_max', int, 0), get_field(data, 'a', float),
                      get_field(data, 'b', float), get_field(data, 'sample', int),
                      get_field(data, 'seed', int, 0), get_precision(data))
    rows = table.to_dict(orient='records')
    return jsonify(to_jsonable({'rows': rows, 'all_passed': all(row['passed'] for row in rows)}))


@app.route('/integrate', methods=['POST'])
def integrate():
    data = request_data()
    result = integrate_job(get_field(data, 'measure', str, required=True),
                           get_field(data, 'a', float), get_field(data, 'r', int, 0),
                           get_field(data, 'b', float), get_field(data, 's', int, 0),
                           get_field(data, 'n', int, required=True), get_field(data, 'f', str, required=True),
                           get_field(data, 'exact', float), get_precision(data))
    return jsonify(to_jsonable(result))


@app.route('/levelset', methods=['POST'])
def levelset():
    """Support [A, B] and contour polylines for each requested rho."""
    data = request_data()
    rhos = get_field(data, 'rho', default=[1.05])
    rhos = [float(v) for v in (rhos if isinstance(rhos, list) else [rhos])]
    payload, frame = levelset_job(get_field(data, 'a', float, required=True),
                                  get_field(data, 'alpha', float, required=True),
                                  get_field(data, 'b', float, required=True),
                                  get_field(data, 'beta', float, required=True),
                                  rhos, get_field(data, 'window'),
                                  get_field(data, 'resolution', default=list(DEFAULT_RESOLUTION)))
    payload['points'] = frame.to_dict(orient='records')
    return jsonify(to_jsonable(payload))


@app.route('/converge', methods=['POST'])
def converge():
    data = request_data()
    schedules = get_field(data, 'schedule', default=['0,0'])
    schedules = [parse_schedule(text) for text in (schedules if isinstance(schedules, list) else [schedules])]
    n_values = list(range(get_field(data, 'n_min', int, 1), get_field(data, 'n_max', int, required=True) + 1,
                          get_field(data, 'step', int, 1)))
    payload, _ = converge_job(get_field(data, 'measure', str, required=True),
                              get_field(data, 'f', str, required=True), schedules, n_values,
                              get_field(data, 'exact', float), parse_point(get_field(data, 'singularity', str)),
                              get_precision(data))
    return jsonify(to_jsonable(payload))


@app.route('/spline', methods=['POST'])
def spline():
    data = request_data()
    payload, _, samples = spline_job(get_field(data, 'f', str, required=True),
                                     get_field(data, 'm', int, required=True),
                                     get_field(data, 'n', int, required=True),
                                     get_field(data, 'moments', int),
                                     get_field(data, 'samples', int, DEFAULT_SPLINE_SAMPLES),
                                     get_precision(data))
    payload['samples'] = samples.to_dict(orient='records')
    return jsonify(to_jsonable(payload))


@app.route('/health', methods=['GET'])
def health_check():
    """Health check endpoint."""
    return jsonify({
        'status': 'healthy',
        'timestamp': datetime.now().isoformat(),
        'version': __version__,
        'endpoints': ENDPOINTS
    })


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    print("=" * 60)
    print("GenGauss quadrature service")
    print("=" * 60)
    print("Server starting on http://0.0.0.0:5000")
    print("Available endpoints:")
    print("  POST /rule           - Build a rule (nodes, weights, checks)")
    print("  POST /check          - Positivity / exactness sweep")
    print("  POST /integrate      - Apply a rule to an expression")
    print("  POST /levelset       - Support and level-set contours")
    print("  POST /converge       - Convergence-rate study")
    print("  POST /spline         - Moment-preserving spline")
    print("  GET  /health         - Health check")
    print("=" * 60)

    app.run(host='0.0.0.0', port=5000, debug=False)
