import csv
import io
import json
import logging
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from itertools import product
from pathlib import Path
from typing import Any, Callable, Dict, Tuple

import mpmath
import numpy as np
from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from core.models import EXIT_FAILURE, EXIT_SCHEMA, FAILURE, INCONCLUSIVE, SUCCESS, JobConfig, Report
from core.serializers import VerifyPolySerializer
from dynamics.models import ScanRow
from dynamics.serializers import ScanSerializer, SimulateSerializer
from dynamics.services import AverageService, ObservableService
from folner.serializers import CeilSerializer, PhiSerializer
from folner.services import FolnerService
from polymap.services import PermMapService, PolyMapService, PolynomialityService
from rates.serializers import RatesSerializer
from rates.services import TupleService
from systems.models import ComplexityCertificate
from systems.serializers import AntihomSystemSerializer, SystemSerializer
from systems.services import ComplexityBoundService, SystemService
from utils.exceptions import BoundOverflowError, WalshlabError
from utils.rationals import format_rational
from vncircle.serializers import VnSweepSerializer
from vncircle.services import CircleService

logger = logging.getLogger(__name__)

VN_HEADER = ("case", "i", "max_oscillation", "passed")
FOLNER_HEADER = ("N", "sup_ratio")


class ReportService:
    """
    Вывод отчетов: CSV для таблиц, JSON для остального.
    Вывод побайтно воспроизводим: ключи отсортированы, рациональные числа
    записываются строками "p/q", перевод строки всегда "\\n"
    """

    @staticmethod
    def scalar(value) -> str:
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        return format_rational(value)

    @classmethod
    def jsonable(cls, value) -> Any:
        if is_dataclass(value) and not isinstance(value, type):
            return cls.jsonable(asdict(value))
        if isinstance(value, dict):
            return {str(key): cls.jsonable(item) for key, item in value.items()}
        if isinstance(value, np.ndarray):
            return [cls.scalar(item) for item in value]
        if isinstance(value, (list, tuple)):
            return [cls.jsonable(item) for item in value]
        if isinstance(value, (bool, str)) or value is None:
            return value
        if isinstance(value, (int, np.integer)):
            return int(value)
        if isinstance(value, Fraction):
            return format_rational(value)
        if isinstance(value, (mpmath.mpf, mpmath.mpc)):
            return mpmath.nstr(value, 30)
        if isinstance(value, (float, np.floating)):
            return repr(float(value))
        return str(value)

    @staticmethod
    def to_json(document: Dict[str, Any]) -> str:
        return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    @staticmethod
    def to_csv(header, rows) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buffer.getvalue()

    @classmethod
    def render(cls, report: Report) -> str:
        if report.is_table:
            return cls.to_csv(report.header, report.rows)
        return cls.to_json({"status": report.status, "result": cls.jsonable(report.payload or {})})

    @classmethod
    def emit_report(cls, report: Report, output: Path | None = None, summary: Path | None = None) -> str:
        """
        Запись отчета в output (если задан) и сводки в summary; возвращает текст отчета
        """
        text = cls.render(report)
        if output is not None:
            output.parent.mkdir(parents=True, exist_ok=True)
            output.write_text(text, encoding="utf-8", newline="")
            logger.info(f"Отчет записан в {output}")
        if summary is not None:
            document = {**cls.jsonable(report.summary or {}), "status": report.status}
            summary.parent.mkdir(parents=True, exist_ok=True)
            summary.write_text(cls.to_json(document), encoding="utf-8", newline="")
        return text


class JobService:
    """
    Выполнение заданий командной строки
    """

    @staticmethod
    def validated(serializer_class, data: Dict[str, Any]) -> Dict[str, Any]:
        serializer = serializer_class(data=data)
        serializer.is_valid(raise_exception=True)
        return serializer.validated_data

    @staticmethod
    def load(config: JobConfig) -> Dict[str, Any]:
        params: Dict[str, Any] = {}
        if config.input is not None:
            params = json.loads(config.input.read_text(encoding="utf-8"))
            if not isinstance(params, dict):
                raise serializers.ValidationError("Входное описание должно быть JSON-объектом")
        params.update(config.params)
        return params

    @classmethod
    def verify_poly(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        data = cls.validated(VerifyPolySerializer, params)
        gb = data["prefiltration"]["prefiltration"]
        maps = [item["map"] for item in data["maps"]]
        perm_maps = [item["map"] for item in data["perm_maps"]]
        subjects = [(str(g), g) for g in maps + perm_maps]
        if data["closure"]:
            for family, service in ((maps, PolyMapService), (perm_maps, PermMapService)):
                subjects += [(f"({g})*({h})", service.pointwise_mul(g, h)) for g, h in product(family, repeat=2)]
                subjects += [(f"({g})^-1", service.pointwise_inv(g)) for g in family]

        verdicts = []
        for label, g in subjects:
            verdict = PolynomialityService.is_polynomial(g, gb, data.get("depth_cap"))
            verdicts.append({"map": label, **ReportService.jsonable(verdict)})
        status = INCONCLUSIVE if any(item["status"] == "Inconclusive" for item in verdicts) else SUCCESS
        return Report(status, payload={"prefiltration": str(gb), "verdicts": verdicts})

    @classmethod
    def complexity(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        bound = None
        if "antihomomorphisms" in params:
            data = cls.validated(AntihomSystemSerializer, params)
            system, budget, right = data["system"], data["budget"], True
        else:
            data = cls.validated(SystemSerializer, params)
            system, right = data["system"], data["right"]
            if "length" in data:
                try:
                    bound = ComplexityBoundService.complexity_bound(data["length"], system.j)
                except BoundOverflowError:
                    if "budget" not in data:
                        raise
                    logger.warning(f"c({data['length']}, {system.j}) не вычислима, используется бюджет {data['budget']}")
            budget = data.get("budget", bound)

        certify = SystemService.certify_right_complexity if right else SystemService.certify_complexity
        result = certify(system, budget)
        payload: Dict[str, Any] = {"system": list(system.describe()), "budget": budget, "complexity_bound": bound}
        if isinstance(result, ComplexityCertificate):
            payload["certificate"] = result.to_tree()
            if bound is not None:
                payload["within_bound"] = result.bound <= bound
            return Report(SUCCESS, payload=payload)
        payload["certificate"] = ReportService.jsonable(result)
        return Report(INCONCLUSIVE, payload=payload)

    @classmethod
    def folner(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        if "left" in params:
            data = cls.validated(CeilSerializer, params)
            left, right = data["left"]["instance"], data["right"]["instance"]
            result = FolnerService.ceil(left, right, data["gamma"], data.get("search_cap"))
            return Report(SUCCESS, payload={"left": str(left), "right": str(right), "gamma": data["gamma"],
                                            **ReportService.jsonable(result)})

        data = cls.validated(PhiSerializer, params)
        model = data["model"]["instance"]
        phi = FolnerService.phi(model, data["gamma"], data["L"], data.get("search_cap"))
        Ns = data["Ns"] or range(1, phi.N + 1)
        table = FolnerService.sup_ratio_table(model, data["L"], Ns)
        rows = tuple((str(N), format_rational(ratio)) for N, ratio in table)
        return Report(SUCCESS, FOLNER_HEADER, rows, summary={"model": str(model), "phi": phi})

    @classmethod
    def simulate(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        data = cls.validated(SimulateSerializer, params)
        action, system, fs = data["action"]["instance"], data["system"], data["fs"]
        limit = AverageService.limit_oracle(action, system, fs, data["horizon"]) if data["limit"] else None

        averages = []
        for item in data["sets"]:
            I = item["instance"]
            values = AverageService.av(action, system, I, fs)
            entry: Dict[str, Any] = {"set": str(I), "values": values}
            if limit is not None:
                entry["matches_limit"] = ObservableService.equal(values, limit.values)
            averages.append(entry)

        payload: Dict[str, Any] = {"j": system.j, "averages": averages}
        if limit is not None:
            payload["limit"] = limit
        return Report(SUCCESS, payload=payload)

    @classmethod
    def scan(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        data = cls.validated(ScanSerializer, params)
        report = AverageService.metastability_scan(
            data["action"]["instance"], data["system"], data["fs"], data["epsilon"], data["growth"],
            range(data["M_from"], data["M_to"] + 1), data["shifts"], data.get("gamma"),
        )
        status = SUCCESS if report.least_passing is not None else INCONCLUSIVE
        rows = tuple(tuple(row.to_row()) for row in report.rows)
        return Report(status, ScanRow.HEADER, rows, summary=report.summary())

    @classmethod
    def vn(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        params = {"seed": config.seed, **params}
        data = cls.validated(VnSweepSerializer, params)
        report = CircleService.vn_sweep(data["epsilon"], data["growth"], data["m0"], data["cases"], data["seed"],
                                        data["max_atoms"])
        rows = tuple(tuple(row.to_row()) for row in report.rows)
        summary = {**report.summary(), "seed": data["seed"], "sequence": list(report.sequence)}
        return Report(SUCCESS if report.all_passed else FAILURE, VN_HEADER, rows, summary=summary)

    @classmethod
    def rates(cls, params: Dict[str, Any], config: JobConfig) -> Report:
        data = cls.validated(RatesSerializer, params)
        build = TupleService.prop_tuple if data["proposition"] else TupleService.main_tuple
        model = data["model"]["instance"] if "model" in data else None
        result = build(data["complexity"], data["epsilon"], data["growth"], data["m"], data["mode"],
                       model, data.get("phi"), data["profile"])
        return Report(SUCCESS, payload={"growth": str(data["growth"]), **result.to_dict()})

    @classmethod
    def handlers(cls) -> Dict[str, Callable[[Dict[str, Any], JobConfig], Report]]:
        return {
            "verify-poly": cls.verify_poly,
            "complexity": cls.complexity,
            "folner": cls.folner,
            "simulate": cls.simulate,
            "scan": cls.scan,
            "vn": cls.vn,
            "rates": cls.rates,
        }

    @classmethod
    def execute(cls, config: JobConfig) -> Report:
        logger.debug(f"Задание {config.command}: input={config.input}, seed={config.seed}")
        return cls.handlers()[config.command](cls.load(config), config)

    @classmethod
    def run(cls, config: JobConfig) -> Tuple[int, str | None]:
        """
        Выполнение задания: код возврата (0, 1 или 2) и текст отчета
        """
        try:
            report = cls.execute(config)
        except (serializers.ValidationError, DjangoValidationError) as exc:
            detail = exc.detail if isinstance(exc, serializers.ValidationError) else exc.messages
            logger.error(f"Некорректные входные данные для {config.command}: {detail}")
            return EXIT_SCHEMA, None
        except json.JSONDecodeError as exc:
            logger.error(f"Некорректный JSON в {config.input}: {exc}")
            return EXIT_SCHEMA, None
        except FileNotFoundError as exc:
            logger.error(f"Входной файл не найден: {exc.filename}")
            return EXIT_SCHEMA, None
        except WalshlabError as exc:
            logger.error(f"Ошибка вычислений в {config.command}: {exc}")
            return EXIT_FAILURE, None

        try:
            text = ReportService.emit_report(report, config.output, config.summary)
        except OSError as exc:
            logger.error(f"Не удалось записать отчет: {exc}")
            return EXIT_FAILURE, None

        code = report.exit_code(config.strict)
        if report.status == SUCCESS:
            logger.info(f"Задание {config.command} выполнено")
        else:
            logger.warning(f"Задание {config.command}: {report.status}, код возврата {code}")
        return code, text


