"""translate パッケージの初期化ファイル"""
from src.translate.align import align_entities, protect_and_retranslate
from src.translate.backends import ExternalTranslator, GlossaryTranslator, IdentityTranslator, load_translator
from src.translate.localize import DialogueMap, build_dialogue_map, localize_entities
from src.translate.ontology import OntologyMapping, canonicalize
from src.translate.pipeline import PipelineReport, translate_dataset
from src.translate.quantities import QuantityDictionary, translate_quantities
from src.translate.types import MTResult, TranslationUnit
