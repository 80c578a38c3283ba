"""Сериализация результатов и архив отчетов проверок"""
